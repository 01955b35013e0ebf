/** Trailing-edge rate limiter for slider-driven requests.
 *
 * Guarantees at most one call per `intervalMs` (the ring slider uses
 * 200 ms, i.e. <= 5 requests/s) and always delivers the latest value:
 * the first change in a quiet period fires immediately, later changes
 * within the interval are coalesced into one trailing call.
 */

export interface RateLimited<T> {
  (value: T): void;
  cancel(): void;
  flush(): void;
}

export function rateLimit<T>(
  fn: (value: T) => void,
  intervalMs: number,
): RateLimited<T> {
  let lastCall = -Infinity;
  let timer: ReturnType<typeof setTimeout> | null = null;
  let pending: { value: T } | null = null;

  const fire = (value: T) => {
    lastCall = Date.now();
    fn(value);
  };

  const limited = ((value: T) => {
    const now = Date.now();
    if (timer === null && now - lastCall >= intervalMs) {
      fire(value);
      return;
    }
    pending = { value };
    if (timer === null) {
      const wait = Math.max(0, intervalMs - (now - lastCall));
      timer = setTimeout(() => {
        timer = null;
        if (pending !== null) {
          const v = pending.value;
          pending = null;
          fire(v);
        }
      }, wait);
    }
  }) as RateLimited<T>;

  limited.cancel = () => {
    if (timer !== null) clearTimeout(timer);
    timer = null;
    pending = null;
  };

  limited.flush = () => {
    if (timer !== null) clearTimeout(timer);
    timer = null;
    if (pending !== null) {
      const v = pending.value;
      pending = null;
      fire(v);
    }
  };

  return limited;
}
