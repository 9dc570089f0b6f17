/**
 * Weekly visit planner: a days-by-locations board the operator fills in
 * one visit at a time, with the engine-optimal objective alongside and a
 * running tally of realized successful interventions after each step.
 */

import { EngineClient, PlanView, OptimalPlan, ApiError } from './api.js';
import { checkChoice } from './constraints.js';

export interface PlannerState {
  plan: PlanView;
  optimal: OptimalPlan;
  message: string;
}

export class Planner {
  state: PlannerState | null = null;

  constructor(private client: EngineClient) {}

  async load(): Promise<PlannerState> {
    const plan = await this.client.planInstance();
    const optimal = await this.client.planOptimal();
    this.state = { plan, optimal, message: '' };
    return this.state;
  }

  /** Attempt a visit; infeasible clicks are rejected locally with a
   * reason, and anything that slips through is still rejected by the
   * server, whose verdict wins. */
  async choose(day: number, location: string): Promise<PlannerState> {
    if (!this.state) throw new Error('planner not loaded');
    const plan = this.state.plan;
    const verdict = checkChoice(plan.chosen, day, location, plan.days, plan.locations);
    if (!verdict.ok) {
      this.state = { ...this.state, message: verdict.reason };
      return this.state;
    }
    try {
      const updated = await this.client.choose(day, location);
      this.state = { ...this.state, plan: updated, message: '' };
    } catch (err) {
      if (err instanceof ApiError) {
        this.state = { ...this.state, message: `${err.code}: ${err.message}` };
      } else {
        throw err;
      }
    }
    return this.state;
  }

  async reset(): Promise<PlannerState> {
    const plan = await this.client.resetPlan();
    const optimal = await this.client.planOptimal();
    this.state = { plan, optimal, message: '' };
    return this.state;
  }

  async stepWeek(days = 7): Promise<PlannerState> {
    if (!this.state) throw new Error('planner not loaded');
    const res = await this.client.step(days);
    if (res.plan) {
      this.state = { ...this.state, plan: res.plan };
    } else {
      this.state = { ...this.state, plan: await this.client.planInstance() };
    }
    return this.state;
  }
}

export function renderPlanBoard(
  doc: Document,
  container: HTMLElement,
  state: PlannerState,
  onPick: (day: number, location: string) => void,
): void {
  container.textContent = '';
  const plan = state.plan;

  const table = doc.createElement('table');
  table.className = 'plan-board';
  const head = doc.createElement('tr');
  head.appendChild(doc.createElement('th'));
  for (let d = 1; d <= plan.days; d++) {
    const th = doc.createElement('th');
    th.textContent = `day ${d}`;
    head.appendChild(th);
  }
  table.appendChild(head);

  plan.locations.forEach((loc, li) => {
    const tr = doc.createElement('tr');
    const name = doc.createElement('th');
    name.textContent = loc;
    tr.appendChild(name);
    for (let d = 1; d <= plan.days; d++) {
      const td = doc.createElement('td');
      const reward = plan.predicted_rewards[li][d - 1];
      td.textContent = reward.toFixed(1);
      td.className = 'plan-cell';
      if (plan.chosen[String(d)] === loc) td.classList.add('plan-chosen');
      td.addEventListener('click', () => onPick(d, loc));
      tr.appendChild(td);
    }
    table.appendChild(tr);
  });
  container.appendChild(table);

  const status = doc.createElement('div');
  status.className = 'plan-status';
  const realized = plan.realized;
  status.textContent =
    `week of ${plan.week_start} · realized ${realized.total} successful interventions ` +
    `(after ${realized.revealed_days} revealed days) · engine optimal ${state.optimal.objective.toFixed(0)}`;
  container.appendChild(status);

  if (state.message) {
    const warn = doc.createElement('div');
    warn.className = 'plan-warning';
    warn.textContent = state.message;
    container.appendChild(warn);
  }
}
