// Configurator view-model: the form is generated from the feature-model
// document, activation constraints drive control visibility, and the
// submit gate plus the live atomic-configuration count come from the
// backend validation round-trip (never computed locally).

import type { SynthlineApi } from './api.js';
import type {
  FeatureDef,
  FeatureModelDoc,
  SelectionDocument,
  ValidateResponse,
  Violation,
} from './types.js';

export interface LabelRow {
  label_name: string;
  label_description: string;
}

export type Draft = Record<string, unknown>;

export interface ConfiguratorState {
  draft: Draft;
  validation: ValidateResponse | null;
  validating: boolean;
}

export function allFeatures(model: FeatureModelDoc): FeatureDef[] {
  return model.groups.flatMap((group) => group.features);
}

export function initialDraft(model: FeatureModelDoc): Draft {
  const draft: Draft = {};
  for (const feature of allFeatures(model)) {
    if (feature.default !== undefined && feature.default !== null) {
      draft[feature.name] = feature.default;
    } else if (feature.kind === 'record-list') {
      draft[feature.name] = [] as LabelRow[];
    }
  }
  return draft;
}

export function isActive(feature: FeatureDef, draft: Draft, model: FeatureModelDoc): boolean {
  const rule = feature.active_when;
  if (!rule) return true;
  const controller = allFeatures(model).find((f) => f.name === rule.feature);
  const value = draft[rule.feature] ?? controller?.default;
  return value === rule.equals;
}

export function visibleFeatures(model: FeatureModelDoc, draft: Draft): FeatureDef[] {
  return allFeatures(model).filter((feature) => isActive(feature, draft, model));
}

/** The flat configuration document to validate/submit: inactive features
 * are omitted entirely (supplying them is a violation server-side). */
export function draftToDocument(model: FeatureModelDoc, draft: Draft): SelectionDocument {
  const document: SelectionDocument = {};
  for (const feature of visibleFeatures(model, draft)) {
    const value = draft[feature.name];
    if (value === undefined || value === null || value === '') continue;
    if (Array.isArray(value) && value.length === 0) continue;
    document[feature.name] = value;
  }
  return document;
}

export function violationsFor(feature: string, validation: ValidateResponse | null): Violation[] {
  if (!validation) return [];
  return validation.violations.filter((violation) => violation.feature === feature);
}

export function submitEnabled(state: ConfiguratorState): boolean {
  return !state.validating && state.validation !== null && state.validation.valid;
}

/** Displayed atomic-configuration count; null until the backend answered. */
export function atomicCount(state: ConfiguratorState): number | null {
  return state.validation?.atomic_count ?? null;
}

/** Round-trip the draft through backend validation (single source of truth). */
export async function revalidate(
  api: SynthlineApi,
  model: FeatureModelDoc,
  state: ConfiguratorState,
): Promise<ConfiguratorState> {
  const next: ConfiguratorState = { ...state, validating: true };
  const validation = await api.validateSelection(draftToDocument(model, next.draft));
  return { ...next, validating: false, validation };
}

export function setValue(state: ConfiguratorState, feature: string, value: unknown): ConfiguratorState {
  return {
    draft: { ...state.draft, [feature]: value },
    validation: null, // stale until the backend re-validates
    validating: false,
  };
}

export function toggleMultiValue(state: ConfiguratorState, feature: string, value: string): ConfiguratorState {
  const current = Array.isArray(state.draft[feature]) ? (state.draft[feature] as string[]) : [];
  const next = current.includes(value)
    ? current.filter((v) => v !== value)
    : [...current, value];
  return setValue(state, feature, next);
}
