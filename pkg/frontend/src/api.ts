/**
 * Typed client for the adherence engine HTTP API.
 * Every number shown in the UI comes from these responses; the client never
 * recomputes scores or objectives on its own.
 */

export interface CohortPatient {
  patient_id: string;
  attention: 'MEDIUM' | 'HIGH';
  risk_score: number | null;
  tb_unit_id: string;
  center_id: string;
  enrollment_date: string;
  days_observed: number;
  missed_28d: number;
}

export interface CohortView {
  today: string;
  patients: CohortPatient[];
}

export interface CalendarDay {
  date: string;
  status: 'taken_call' | 'taken_manual' | 'missed';
  attention: 'MEDIUM' | 'HIGH';
  calls: number;
}

export interface PatientDetail {
  patient_id: string;
  gender: string;
  age_band: string;
  weight_band: string;
  center_id: string;
  tb_unit_id: string;
  days: CalendarDay[];
}

export interface RiskView {
  patient_id: string;
  score: number;
  window_end: string;
  day_attribution: number[];
  feature_attribution: number[];
  feature_names: string[];
}

export interface PlanRealized {
  revealed_days: number;
  per_day: Record<string, number>;
  total: number;
}

export interface PlanView {
  week_start: string;
  days: number;
  locations: string[];
  predicted_rewards: number[][];
  chosen: Record<string, string>;
  realized: PlanRealized;
  n_patients: number;
}

export interface OptimalPlan {
  objective: number;
  x: number[][];
  assignments: { day: number; location: string }[];
  locations: string[];
}

export interface ApiFailure {
  code: string;
  message: string;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(base + path, {
    headers: { 'Content-Type': 'application/json' },
    ...init,
  });
  if (!res.ok) {
    let failure: ApiFailure = { code: 'http_' + res.status, message: res.statusText };
    try {
      failure = (await res.json()) as ApiFailure;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(res.status, failure.code, failure.message);
  }
  return (await res.json()) as T;
}

export class EngineClient {
  constructor(public base: string = '') {}

  cohort(): Promise<CohortView> {
    return request(this.base, '/api/cohort');
  }

  patient(id: string): Promise<PatientDetail> {
    return request(this.base, `/api/patients/${id}`);
  }

  risk(id: string): Promise<RiskView> {
    return request(this.base, `/api/patients/${id}/risk`);
  }

  planInstance(): Promise<PlanView> {
    return request(this.base, '/api/plan/instance');
  }

  planOptimal(): Promise<OptimalPlan> {
    return request(this.base, '/api/plan/optimal');
  }

  choose(day: number, location: string): Promise<PlanView> {
    return request(this.base, '/api/plan/choose', {
      method: 'POST',
      body: JSON.stringify({ day, location }),
    });
  }

  resetPlan(): Promise<PlanView> {
    return request(this.base, '/api/plan/reset', { method: 'POST', body: '{}' });
  }

  step(days: number): Promise<{ today: string; plan?: PlanView }> {
    return request(this.base, '/api/sim/step', {
      method: 'POST',
      body: JSON.stringify({ days }),
    });
  }
}
