/** Wire types of the mapping server's JSON API. */

export interface Keyword {
  token: string;
  score: number;
}

export interface ExampleSegment {
  segment_id: string;
  text: string;
  beta: number;
}

export interface AspectInfo {
  mia: number;
  keywords: Keyword[];
  examples: ExampleSegment[];
  gsa: string | null;
}

export interface AspectsPayload {
  gsa_names: string[];
  general: string | null;
  aspects: AspectInfo[];
}

export interface MappingEntry {
  mia: number;
  gsa: string | null;
}

export interface DraftPayload {
  gsa_names: string[];
  general: string | null;
  entries: MappingEntry[];
  mapped_count: number;
}

export interface PerAspectScore {
  precision: number;
  recall: number;
  f1: number;
  support: number;
}

export interface ValidationReport {
  micro_f1: number;
  weighted_macro: { precision: number; recall: number; f1: number };
  per_aspect: Record<string, PerAspectScore>;
  confusion: number[][];
  labels: string[];
  count: number;
}

export interface CommitResponse {
  path: string;
  hash: string;
}

/** Assignment status used by the progress counter. */
export type CardStatus = 'mapped' | 'unmapped' | 'undecided';
