"""Device-to-device relay routing.

Connectivity is a plain graph: an edge exists where the pairwise received
power clears the receiver sensitivity. Routing picks a minimum-hop path by
breadth-first search; ties are broken toward smaller node ids so repeated
runs pick the same chain.
"""

from __future__ import annotations

from collections import deque
from typing import Optional


def min_hop_path(src, dst, neighbors: dict) -> Optional[list]:
    """Shortest path src -> dst over an adjacency dict, or None.

    neighbors maps node id -> iterable of node ids. Neighbor exploration is
    in ascending id order, which makes the first discovered parent (and so
    the returned path) deterministic.
    """
    if src == dst:
        return [src]
    if src not in neighbors:
        return None
    parent = {src: None}
    q = deque([src])
    while q:
        u = q.popleft()
        for v in sorted(neighbors.get(u, ())):
            if v in parent:
                continue
            parent[v] = u
            if v == dst:
                path = [v]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            q.append(v)
    return None
