import { describe, expect, it } from 'vitest';

import type { CalendarDay, CohortPatient, RiskView } from '../src/api';
import { STATUS_CLASS, renderCohortGrid, sortByRisk } from '../src/grid';
import { attributionColor, renderAttributionStrip, topFeatures } from '../src/inspector';

function day(date: string, status: CalendarDay['status']): CalendarDay {
  return { date, status, attention: 'MEDIUM', calls: status === 'taken_call' ? 1 : 0 };
}

function patient(id: string, attention: 'MEDIUM' | 'HIGH', risk: number | null): CohortPatient {
  return {
    patient_id: id,
    attention,
    risk_score: risk,
    tb_unit_id: 'U000',
    center_id: 'C000',
    enrollment_date: '2023-01-06',
    days_observed: 3,
    missed_28d: 1,
  };
}

describe('cohort grid', () => {
  it('renders a 3-patient fixture with colors matching calendar statuses', () => {
    const patients = [
      patient('P1', 'MEDIUM', 0.2),
      patient('P2', 'HIGH', 0.9),
      patient('P3', 'MEDIUM', null),
    ];
    const calendars = new Map<string, CalendarDay[]>([
      ['P1', [day('2023-01-06', 'taken_call'), day('2023-01-07', 'missed')]],
      ['P2', [day('2023-01-06', 'missed'), day('2023-01-07', 'missed')]],
      ['P3', [day('2023-01-06', 'taken_manual')]],
    ]);
    const container = document.createElement('div');
    renderCohortGrid(document, container, patients, calendars);

    const rows = Array.from(container.querySelectorAll('.grid-row'));
    expect(rows).toHaveLength(3);

    const byId = new Map(rows.map((r) => [(r as HTMLElement).dataset.patientId, r]));
    const p1cells = byId.get('P1')!.querySelectorAll('.cell');
    expect(p1cells[0].className).toContain(STATUS_CLASS.taken_call);
    expect(p1cells[1].className).toContain(STATUS_CLASS.missed);
    const p2cells = byId.get('P2')!.querySelectorAll('.cell');
    expect(p2cells[0].className).toContain(STATUS_CLASS.missed);
    const p3cells = byId.get('P3')!.querySelectorAll('.cell');
    expect(p3cells[0].className).toContain(STATUS_CLASS.taken_manual);

    // attention badge follows the engine's value
    expect(byId.get('P2')!.querySelector('.badge')!.textContent).toBe('HIGH');
    expect(byId.get('P1')!.querySelector('.badge')!.textContent).toBe('MEDIUM');
  });

  it('sorts rows by risk score descending, unscored last', () => {
    const ordered = sortByRisk([
      patient('A', 'MEDIUM', 0.1),
      patient('B', 'MEDIUM', null),
      patient('C', 'MEDIUM', 0.7),
    ]).map((p) => p.patient_id);
    expect(ordered).toEqual(['C', 'A', 'B']);
  });
});

describe('attribution strip', () => {
  const risk: RiskView = {
    patient_id: 'P1',
    score: 0.61,
    window_end: '2023-02-01',
    day_attribution: [0.02, -0.01, 0, 0.005, -0.03, 0.04, 0.09],
    feature_attribution: [0.5, -0.2, 0.001],
    feature_names: ['f_a', 'f_b', 'f_c'],
  };

  it('has one cell per input day with sign-matching colors', () => {
    const strip = renderAttributionStrip(document, risk);
    const cells = Array.from(strip.querySelectorAll('.attr-cell')) as HTMLElement[];
    expect(cells).toHaveLength(7);
    expect(cells[0].dataset.sign).toBe('+');
    expect(cells[1].dataset.sign).toBe('-');
    expect(cells[2].dataset.sign).toBe('0');
  });

  it('renders a blank strip for a neutral model', () => {
    const neutral = { ...risk, day_attribution: [0, 0, 0, 0, 0, 0, 0] };
    const strip = renderAttributionStrip(document, neutral);
    const cells = Array.from(strip.querySelectorAll('.attr-cell')) as HTMLElement[];
    expect(cells.every((c) => c.dataset.sign === '0')).toBe(true);
    expect(new Set(cells.map((c) => c.style.backgroundColor)).size).toBe(1);
  });

  it('color helper is white at zero and saturates with magnitude', () => {
    expect(attributionColor(0, 1)).toBe('rgb(255,255,255)');
    expect(attributionColor(1, 1)).toBe('rgb(255,95,95)');
    expect(attributionColor(-1, 1)).toBe('rgb(95,95,255)');
  });

  it('top features ranks by magnitude', () => {
    expect(topFeatures(risk, 2).map((f) => f.name)).toEqual(['f_a', 'f_b']);
  });
});
