// Keyboard-first annotation: every student gets a stable single-key binding.

const KEY_POOL = "123456789abcdefghijklmoqrstuvwyz"; // n/p/x stay free for navigation and "none"

export function assignHotkeys(students: string[], reserved: string[] = []): Map<string, string> {
  const blocked = new Set(reserved);
  const bindings = new Map<string, string>();
  let poolIndex = 0;
  for (const student of students) {
    while (poolIndex < KEY_POOL.length && blocked.has(KEY_POOL[poolIndex]!)) {
      poolIndex += 1;
    }
    if (poolIndex >= KEY_POOL.length) break;
    bindings.set(KEY_POOL[poolIndex]!, student);
    poolIndex += 1;
  }
  return bindings;
}

export function hotkeyLegend(bindings: Map<string, string>): string {
  return [...bindings.entries()].map(([key, student]) => `[${key}] ${student}`).join("  ");
}
