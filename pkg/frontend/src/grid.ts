/**
 * Cohort adherence grid: one row per patient, one cell per recent day.
 * Missed doses render red, called doses green, manual marks grey, plus a
 * MEDIUM/HIGH attention badge. Rows sort by model risk score when scores
 * are available.
 */

import { CalendarDay, CohortPatient } from './api.js';

export const STATUS_CLASS: Record<CalendarDay['status'], string> = {
  taken_call: 'cell-taken',
  taken_manual: 'cell-manual',
  missed: 'cell-missed',
};

export function sortByRisk(patients: CohortPatient[]): CohortPatient[] {
  return [...patients].sort((a, b) => {
    const ra = a.risk_score ?? -1;
    const rb = b.risk_score ?? -1;
    if (rb !== ra) return rb - ra;
    return a.patient_id.localeCompare(b.patient_id);
  });
}

export function renderAttentionBadge(doc: Document, attention: 'MEDIUM' | 'HIGH'): HTMLElement {
  const badge = doc.createElement('span');
  badge.className = `badge badge-${attention.toLowerCase()}`;
  badge.textContent = attention;
  return badge;
}

export function renderPatientRow(
  doc: Document,
  patient: CohortPatient,
  days: CalendarDay[],
  onSelect?: (id: string) => void,
): HTMLElement {
  const row = doc.createElement('div');
  row.className = 'grid-row';
  row.dataset.patientId = patient.patient_id;

  const label = doc.createElement('span');
  label.className = 'grid-label';
  label.textContent = patient.patient_id;
  if (onSelect) {
    label.addEventListener('click', () => onSelect(patient.patient_id));
  }
  row.appendChild(label);
  row.appendChild(renderAttentionBadge(doc, patient.attention));

  const score = doc.createElement('span');
  score.className = 'grid-score';
  score.textContent = patient.risk_score === null ? '–' : patient.risk_score.toFixed(3);
  row.appendChild(score);

  const strip = doc.createElement('span');
  strip.className = 'grid-strip';
  for (const day of days) {
    const cell = doc.createElement('span');
    cell.className = `cell ${STATUS_CLASS[day.status]}`;
    cell.title = `${day.date}: ${day.status}`;
    strip.appendChild(cell);
  }
  row.appendChild(strip);
  return row;
}

export function renderCohortGrid(
  doc: Document,
  container: HTMLElement,
  patients: CohortPatient[],
  calendars: Map<string, CalendarDay[]>,
  windowDays = 28,
  onSelect?: (id: string) => void,
): void {
  container.textContent = '';
  for (const patient of sortByRisk(patients)) {
    const days = calendars.get(patient.patient_id) ?? [];
    container.appendChild(
      renderPatientRow(doc, patient, days.slice(-windowDays), onSelect),
    );
  }
}
