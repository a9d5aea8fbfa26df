/** Thin typed client for the mapping server. All state lives server-side;
 * the UI never computes a metric itself. */

import type {
  AspectsPayload,
  CommitResponse,
  DraftPayload,
  MappingEntry,
  ValidationReport,
} from './types';

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(path, {
    headers: { 'content-type': 'application/json' },
    ...init,
  });
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (typeof body.detail === 'string') detail = body.detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export function fetchAspects(): Promise<AspectsPayload> {
  return request<AspectsPayload>('/api/aspects');
}

export function fetchDraft(): Promise<DraftPayload> {
  return request<DraftPayload>('/api/mapping');
}

/** One PUT per user action; the response echoes the full server draft. */
export function putEntries(entries: MappingEntry[]): Promise<DraftPayload> {
  return request<DraftPayload>('/api/mapping', {
    method: 'PUT',
    body: JSON.stringify({ entries }),
  });
}

export function validateDraft(): Promise<ValidationReport> {
  return request<ValidationReport>('/api/validate', { method: 'POST' });
}

export function commitDraft(): Promise<CommitResponse> {
  return request<CommitResponse>('/api/mapping/commit', { method: 'POST' });
}
