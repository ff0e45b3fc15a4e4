import { expect } from "vitest";

/** Episode lengths in days for a 300 s control interval. */
export const DAYS_3_STEPS = 0.010416666666666666;
export const DAYS_72_STEPS = 0.25;
export const DAYS_100_STEPS = 0.3472222222222222;

/**
 * Assert two float64 vectors are bit-identical (Object.is per element,
 * so -0 vs 0 and NaN mismatches are caught too).
 */
export function expectIdenticalVector(
  actual: readonly number[],
  expected: readonly number[],
  label: string,
): void {
  expect(actual.length, `${label} length`).toBe(expected.length);
  for (let i = 0; i < actual.length; i++) {
    if (!Object.is(actual[i], expected[i])) {
      expect.fail(`${label}[${i}] differs: got ${actual[i]}, want ${expected[i]}`);
    }
  }
}

/**
 * Assert two flat {name: number} records hold bit-identical values and
 * exactly the same key set.
 */
export function expectIdenticalRecord(
  actual: Record<string, number>,
  expected: Record<string, number>,
  label: string,
): void {
  expect(Object.keys(actual).sort(), `${label} keys`).toEqual(Object.keys(expected).sort());
  for (const key of Object.keys(expected)) {
    if (!Object.is(actual[key], expected[key])) {
      expect.fail(`${label}.${key} differs: got ${actual[key]}, want ${expected[key]}`);
    }
  }
}
