/**
 * Single-page wiring: cohort grid, patient inspector, and the weekly
 * planner, all fed by the engine API with a retryable banner when the
 * service is unreachable.
 */

import { EngineClient, CohortView, CalendarDay } from './api.js';
import { renderCohortGrid } from './grid.js';
import { Planner, renderPlanBoard } from './planner.js';
import { renderInspector } from './inspector.js';

export class App {
  client: EngineClient;
  planner: Planner;

  constructor(base = '') {
    this.client = new EngineClient(base);
    this.planner = new Planner(this.client);
  }

  private el(id: string): HTMLElement {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node;
  }

  async refreshGrid(): Promise<void> {
    const banner = this.el('banner');
    let cohort: CohortView;
    try {
      cohort = await this.client.cohort();
      banner.hidden = true;
    } catch {
      banner.hidden = false;
      banner.textContent = 'engine unreachable - retry';
      return;
    }
    this.el('today').textContent = cohort.today;
    const calendars = new Map<string, CalendarDay[]>();
    await Promise.all(
      cohort.patients.map(async (p) => {
        const detail = await this.client.patient(p.patient_id);
        calendars.set(p.patient_id, detail.days);
      }),
    );
    renderCohortGrid(document, this.el('grid'), cohort.patients, calendars, 28, (id) =>
      this.inspect(id),
    );
  }

  async inspect(patientId: string): Promise<void> {
    const panel = this.el('inspector');
    try {
      const risk = await this.client.risk(patientId);
      renderInspector(document, panel, risk);
    } catch (err) {
      panel.textContent = `no risk view for ${patientId}: ${(err as Error).message}`;
    }
  }

  async refreshPlanner(): Promise<void> {
    const state = this.planner.state ?? (await this.planner.load());
    renderPlanBoard(document, this.el('planner'), state, (day, loc) => {
      void this.planner.choose(day, loc).then(() => this.refreshPlanner());
    });
  }

  async start(): Promise<void> {
    this.el('reset').addEventListener('click', () => {
      void this.planner.reset().then(() => this.refreshPlanner());
    });
    this.el('step').addEventListener('click', () => {
      void this.planner.stepWeek().then(() => Promise.all([this.refreshPlanner(), this.refreshGrid()]));
    });
    this.el('reload').addEventListener('click', () => void this.refreshGrid());
    await this.refreshGrid();
    await this.refreshPlanner();
  }
}

declare global {
  interface Window {
    adherelabApp?: App;
  }
}

if (typeof document !== 'undefined' && document.getElementById('grid')) {
  const app = new App('');
  window.adherelabApp = app;
  void app.start();
}
