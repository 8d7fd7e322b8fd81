// One in-flight request per session: tasks chain in submission order, and
// later failures never break the chain.  Plus a debounce helper for
// per-pixel widgets (sliders default to 150 ms upstream).

export class RequestQueue {
  private chain: Promise<unknown> = Promise.resolve();
  private inFlight = 0;

  get pending(): number {
    return this.inFlight;
  }

  enqueue<T>(task: () => Promise<T>): Promise<T> {
    this.inFlight += 1;
    const run = this.chain.then(task);
    this.chain = run.catch(() => undefined).finally(() => {
      this.inFlight -= 1;
    });
    return run;
  }
}

export type Debounced<A extends unknown[]> = ((...args: A) => void) & {
  flush: () => void;
  cancel: () => void;
};

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  ms: number,
): Debounced<A> {
  let timer: ReturnType<typeof setTimeout> | null = null;
  let last: A | null = null;
  const call = (...args: A) => {
    last = args;
    if (timer !== null) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = null;
      if (last !== null) fn(...last);
      last = null;
    }, ms);
  };
  call.flush = () => {
    if (timer !== null) {
      clearTimeout(timer);
      timer = null;
      if (last !== null) fn(...last);
      last = null;
    }
  };
  call.cancel = () => {
    if (timer !== null) clearTimeout(timer);
    timer = null;
    last = null;
  };
  return call;
}
