import { describe, expect, it } from 'vitest';

import { checkChoice, feasible } from '../src/constraints';

const LOCS = ['U000', 'U001', 'U002'];

describe('matching constraint mirror', () => {
  it('accepts a fresh day and location', () => {
    expect(checkChoice({}, 1, 'U000', 7, LOCS)).toEqual({ ok: true });
  });

  it('rejects a day that already has a visit', () => {
    const verdict = checkChoice({ '2': 'U001' }, 2, 'U000', 7, LOCS);
    expect(verdict.ok).toBe(false);
    if (!verdict.ok) expect(verdict.reason).toContain('day 2');
  });

  it('rejects a location visited on another day', () => {
    const verdict = checkChoice({ '3': 'U002' }, 5, 'U002', 7, LOCS);
    expect(verdict.ok).toBe(false);
    if (!verdict.ok) expect(verdict.reason).toContain('U002');
  });

  it('rejects out-of-range days and unknown locations', () => {
    expect(checkChoice({}, 0, 'U000', 7, LOCS).ok).toBe(false);
    expect(checkChoice({}, 8, 'U000', 7, LOCS).ok).toBe(false);
    expect(checkChoice({}, 2.5, 'U000', 7, LOCS).ok).toBe(false);
    expect(checkChoice({}, 1, 'U999', 7, LOCS).ok).toBe(false);
  });

  it('feasible() mirrors the polytope constraints', () => {
    expect(feasible({ '1': 'U000', '2': 'U001' }, 7)).toBe(true);
    expect(feasible({ '1': 'U000', '2': 'U000' }, 7)).toBe(false); // location twice
    expect(feasible({ '9': 'U000' }, 7)).toBe(false); // day out of range
  });
});
