// Page wiring: configurator form, run console, and dataset panel.

import { SynthlineApi } from './api.js';
import {
  ConfiguratorState,
  atomicCount,
  draftToDocument,
  initialDraft,
  revalidate,
  setValue,
  submitEnabled,
  toggleMultiValue,
  visibleFeatures,
  type LabelRow,
} from './configurator.js';
import { initialConsoleState, isTerminalEvent, reduceEvent, type ConsoleState } from './console.js';
import { curationStageRows, labelCountRows, metricsBadges } from './dataset.js';
import { renderCurationStages, renderGroup, renderProgress, escapeHtml } from './render.js';
import { subscribeEvents } from './sse.js';
import type { FeatureModelDoc, ProgressEvent } from './types.js';

const api = new SynthlineApi();

interface PageState {
  model: FeatureModelDoc | null;
  configurator: ConfiguratorState;
  console: ConsoleState;
  runId: string | null;
  datasetId: string | null;
}

const state: PageState = {
  model: null,
  configurator: { draft: {}, validation: null, validating: false },
  console: initialConsoleState(),
  runId: null,
  datasetId: null,
};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

let debounceTimer: number | undefined;

function scheduleValidation(): void {
  window.clearTimeout(debounceTimer);
  debounceTimer = window.setTimeout(() => {
    void runValidation();
  }, 250);
}

async function runValidation(): Promise<void> {
  if (!state.model) return;
  try {
    state.configurator = await revalidate(api, state.model, state.configurator);
  } catch (error) {
    showBanner(`validation request failed: ${String(error)}`);
    return;
  }
  renderForm();
}

function labelsOf(draft: ConfiguratorState['draft']): LabelRow[] {
  return Array.isArray(draft.labels) ? (draft.labels as LabelRow[]) : [];
}

function renderForm(): void {
  const model = state.model;
  if (!model) return;
  const visible = new Set(visibleFeatures(model, state.configurator.draft).map((f) => f.name));
  el('form').innerHTML = model.groups
    .map((group) => renderGroup(group, visible, state.configurator))
    .join('');
  renderLabelRows();

  const count = atomicCount(state.configurator);
  el('atomic-count').textContent = count === null ? '—' : String(count);
  (el('submit') as HTMLButtonElement).disabled = !submitEnabled(state.configurator);
  bindFormInputs();
}

function renderLabelRows(): void {
  const container = document.querySelector<HTMLElement>('.labels[data-feature="labels"]');
  if (!container) return;
  const rows = labelsOf(state.configurator.draft);
  container.innerHTML = rows
    .map(
      (row, i) => `
      <div class="label-row">
        <input type="text" data-label-name="${i}" placeholder="label name" value="${escapeHtml(row.label_name)}">
        <input type="text" data-label-desc="${i}" placeholder="label description" value="${escapeHtml(row.label_description)}">
        <button type="button" data-label-remove="${i}">×</button>
      </div>`,
    )
    .join('');
}

function bindFormInputs(): void {
  const form = el('form');
  form.querySelectorAll<HTMLSelectElement>('select[data-feature]').forEach((select) => {
    select.onchange = () => {
      state.configurator = setValue(state.configurator, select.dataset.feature!, select.value);
      renderForm();
      scheduleValidation();
    };
  });
  form.querySelectorAll<HTMLInputElement>('input[type=checkbox][data-feature]').forEach((box) => {
    box.onchange = () => {
      state.configurator = toggleMultiValue(state.configurator, box.dataset.feature!, box.value);
      renderForm();
      scheduleValidation();
    };
  });
  form
    .querySelectorAll<HTMLInputElement>('input[data-feature]:not([type=checkbox])')
    .forEach((input) => {
      input.onchange = () => {
        const raw = input.value;
        const value = input.type === 'number' && raw !== '' ? Number(raw) : raw;
        state.configurator = setValue(state.configurator, input.dataset.feature!, value);
        scheduleValidation();
      };
    });
  form.querySelectorAll<HTMLInputElement>('input[data-feature-free]').forEach((input) => {
    input.onchange = () => {
      const feature = input.dataset.featureFree!;
      const model = state.model!;
      const def = visibleFeatures(model, state.configurator.draft).find((f) => f.name === feature);
      const catalog = Array.isArray(def?.domain) ? (def!.domain as string[]) : [];
      const checked = (state.configurator.draft[feature] as string[] | undefined)?.filter((v) =>
        catalog.includes(v),
      ) ?? [];
      const extras = input.value
        .split(',')
        .map((v) => v.trim())
        .filter(Boolean);
      state.configurator = setValue(state.configurator, feature, [...checked, ...extras]);
      scheduleValidation();
    };
  });
  form.querySelectorAll<HTMLButtonElement>('button[data-add-label]').forEach((button) => {
    button.onclick = () => {
      const rows = [...labelsOf(state.configurator.draft), { label_name: '', label_description: '' }];
      state.configurator = setValue(state.configurator, 'labels', rows);
      renderForm();
    };
  });
  form.querySelectorAll<HTMLInputElement>('input[data-label-name]').forEach((input) => {
    input.onchange = () => updateLabel(Number(input.dataset.labelName), 'label_name', input.value);
  });
  form.querySelectorAll<HTMLInputElement>('input[data-label-desc]').forEach((input) => {
    input.onchange = () => updateLabel(Number(input.dataset.labelDesc), 'label_description', input.value);
  });
  form.querySelectorAll<HTMLButtonElement>('button[data-label-remove]').forEach((button) => {
    button.onclick = () => {
      const rows = labelsOf(state.configurator.draft).filter(
        (_, i) => i !== Number(button.dataset.labelRemove),
      );
      state.configurator = setValue(state.configurator, 'labels', rows);
      renderForm();
      scheduleValidation();
    };
  });
}

function updateLabel(index: number, key: keyof LabelRow, value: string): void {
  const rows = labelsOf(state.configurator.draft).map((row, i) =>
    i === index ? { ...row, [key]: value } : row,
  );
  state.configurator = setValue(state.configurator, 'labels', rows);
  scheduleValidation();
}

function showBanner(message: string): void {
  const banner = el('banner');
  banner.textContent = message;
  banner.style.display = message ? 'block' : 'none';
}

async function submitRun(): Promise<void> {
  if (!state.model) return;
  const document_ = draftToDocument(state.model, state.configurator.draft);
  const seedInput = (el('run-seed') as HTMLInputElement).value;
  const options: Record<string, unknown> = { provider: (el('run-provider') as HTMLSelectElement).value };
  if (seedInput !== '') options.seed = Number(seedInput);
  try {
    const created = await api.createRun(document_, options);
    state.runId = created.run_id;
    state.console = initialConsoleState();
    watchRun(created.run_id);
  } catch (error) {
    showBanner(`run rejected: ${JSON.stringify(error)}`);
  }
}

function watchRun(runId: string): void {
  el('console').innerHTML = renderProgress(state.console);
  subscribeEvents<ProgressEvent>(
    api.eventsUrl(runId),
    (event) => {
      state.console = reduceEvent(state.console, event);
      el('console').innerHTML = renderProgress(state.console);
      if (event.phase === 'done') void showDataset(runId);
    },
    isTerminalEvent,
  );
}

async function showDataset(datasetId: string): Promise<void> {
  state.datasetId = datasetId;
  const manifest = await api.getDataset(datasetId);
  const page = await api.getSamples(datasetId, 0, 10);
  const counts = labelCountRows(manifest)
    .map((row) => `<li>${escapeHtml(row.label)}: ${row.count}</li>`)
    .join('');
  const rows = page.samples
    .map((s) => `<tr><td>${escapeHtml(s.text)}</td><td>${escapeHtml(s.label)}</td></tr>`)
    .join('');
  el('dataset').innerHTML = `
    <h2>dataset ${escapeHtml(datasetId)} (${manifest.size} samples)</h2>
    <ul class="counts">${counts}</ul>
    <p>
      <a href="${api.datasetUrl(state.runId ?? datasetId, 'csv')}" download>CSV</a> ·
      <a href="${api.datasetUrl(state.runId ?? datasetId, 'json')}" download>JSON</a>
    </p>
    <table class="samples"><thead><tr><th>text</th><th>label</th></tr></thead><tbody>${rows}</tbody></table>
    <div class="actions">
      <button id="metrics-button">Compute metrics</button>
      <button id="curate-button">Curate (20%)</button>
    </div>
    <div id="metrics-panel"></div>
    <div id="curation-panel"></div>`;
  el('metrics-button').onclick = async () => {
    const report = await api.getMetrics(datasetId);
    const badges = metricsBadges(report);
    el('metrics-panel').innerHTML =
      `<p>INGF: <b>${badges.ingf}</b> · APS: <b>${badges.aps}</b> (n=${report.n_samples})</p>`;
  };
  el('curate-button').onclick = async () => {
    const result = await api.curate(datasetId, { fraction: 0.2, balance: true, seed: 0 });
    el('curation-panel').innerHTML =
      `<p>curated into ${escapeHtml(result.dataset_id)}</p>` +
      renderCurationStages(curationStageRows(result.report));
  };
}

async function boot(): Promise<void> {
  try {
    state.model = await api.getFeatureModel();
  } catch (error) {
    showBanner(`could not load the feature model: ${String(error)}`);
    return;
  }
  state.configurator = { draft: initialDraft(state.model), validation: null, validating: false };
  renderForm();
  el('submit').onclick = () => void submitRun();
  void runValidation();
}

void boot();
