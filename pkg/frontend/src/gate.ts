// Sequence tokens for in-flight requests: a response is applied only if
// no newer request was issued in the meantime, so a recommendation list
// can never regress to a superseded turn.

export interface RequestGate {
  next(): number;
  isLatest(token: number): boolean;
  reset(): void;
}

export function createRequestGate(): RequestGate {
  let current = 0;
  return {
    next() {
      current += 1;
      return current;
    },
    isLatest(token) {
      return token === current;
    },
    reset() {
      current += 1;
    },
  };
}
