// Anonymous session id in a browser cookie; a fresh cookie means a fresh
// session, which is exactly how the analytics side counts "users".

const COOKIE = "v2v_session";

function randomId(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return Date.now().toString(36) + Math.random().toString(36).slice(2, 10);
}

export function getSessionId(doc: Document = document): string {
  const match = doc.cookie.match(new RegExp(`(?:^|; )${COOKIE}=([^;]+)`));
  if (match) return match[1];
  const id = randomId();
  doc.cookie = `${COOKIE}=${id}; path=/; max-age=${60 * 60 * 24 * 30}`;
  return id;
}
