/** Fixed-capacity append-only buffer; old entries fall off the front. */
export class Ring<T> {
  private buf: T[] = [];
  private head = 0; // index of oldest element once full

  constructor(readonly cap: number) {
    if (cap < 1) throw new Error("ring capacity must be >= 1");
  }

  push(v: T): void {
    if (this.buf.length < this.cap) {
      this.buf.push(v);
    } else {
      this.buf[this.head] = v;
      this.head = (this.head + 1) % this.cap;
    }
  }

  get length(): number {
    return this.buf.length;
  }

  /** Oldest to newest. */
  values(): T[] {
    return this.buf.slice(this.head).concat(this.buf.slice(0, this.head));
  }

  last(): T | undefined {
    if (this.buf.length === 0) return undefined;
    const i = (this.head + this.buf.length - 1) % this.buf.length;
    return this.buf[i];
  }
}
