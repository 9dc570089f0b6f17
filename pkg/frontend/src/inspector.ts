/**
 * Patient inspector: the per-day attribution strip and the strongest
 * static-feature attributions for one patient's current risk score.
 * Red pushes the prediction toward HIGH risk, blue toward MEDIUM; cell
 * intensity follows the magnitude reported by the engine.
 */

import { RiskView } from './api.js';

export function attributionColor(value: number, scale: number): string {
  if (scale <= 0 || value === 0) return 'rgb(255,255,255)';
  const t = Math.min(Math.abs(value) / scale, 1);
  const chan = Math.round(255 - 160 * t);
  return value > 0 ? `rgb(255,${chan},${chan})` : `rgb(${chan},${chan},255)`;
}

export function renderAttributionStrip(doc: Document, risk: RiskView): HTMLElement {
  const strip = doc.createElement('div');
  strip.className = 'attr-strip';
  const scale = Math.max(...risk.day_attribution.map(Math.abs), 1e-12);
  risk.day_attribution.forEach((value, i) => {
    const cell = doc.createElement('span');
    cell.className = 'attr-cell';
    cell.dataset.sign = value > 0 ? '+' : value < 0 ? '-' : '0';
    cell.style.backgroundColor = attributionColor(value, scale);
    cell.title = `day ${i + 1 - risk.day_attribution.length}: ${value.toFixed(4)}`;
    strip.appendChild(cell);
  });
  return strip;
}

export function topFeatures(risk: RiskView, k = 6): { name: string; value: number }[] {
  const pairs = risk.feature_names.map((name, i) => ({
    name,
    value: risk.feature_attribution[i],
  }));
  pairs.sort((a, b) => Math.abs(b.value) - Math.abs(a.value));
  return pairs.slice(0, k);
}

export function renderInspector(doc: Document, container: HTMLElement, risk: RiskView): void {
  container.textContent = '';
  const title = doc.createElement('h3');
  title.textContent = `${risk.patient_id} · risk ${risk.score.toFixed(3)} (through ${risk.window_end})`;
  container.appendChild(title);
  container.appendChild(renderAttributionStrip(doc, risk));

  const list = doc.createElement('ul');
  list.className = 'attr-features';
  for (const { name, value } of topFeatures(risk)) {
    const li = doc.createElement('li');
    li.textContent = `${name}: ${value >= 0 ? '+' : ''}${value.toFixed(4)}`;
    li.style.color = value > 0 ? '#a40000' : value < 0 ? '#0042a4' : '#444';
    list.appendChild(li);
  }
  container.appendChild(list);
}
