// HTML renderers for the configurator form and console widgets.

import type { ConfiguratorState } from './configurator.js';
import { violationsFor } from './configurator.js';
import type { ConsoleState } from './console.js';
import type { FeatureDef, FeatureGroupDef } from './types.js';
import type { CurationStageRow } from './dataset.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function violationHtml(feature: string, state: ConfiguratorState): string {
  const violations = violationsFor(feature, state.validation);
  if (!violations.length) return '';
  return `<div class="violations">${violations
    .map((v) => `<span class="violation">${escapeHtml(v.message)}</span>`)
    .join('')}</div>`;
}

function controlHtml(feature: FeatureDef, state: ConfiguratorState): string {
  const value = state.draft[feature.name];
  if (feature.kind === 'single-select' && Array.isArray(feature.domain)) {
    const options = feature.domain
      .map(
        (option) =>
          `<option value="${escapeHtml(option)}"${option === value ? ' selected' : ''}>${escapeHtml(option)}</option>`,
      )
      .join('');
    return `<select data-feature="${feature.name}">${options}</select>`;
  }
  if (feature.kind === 'multi-select' && Array.isArray(feature.domain)) {
    const catalog = feature.domain;
    const selected = Array.isArray(value) ? (value as string[]) : [];
    const boxes = catalog
      .map(
        (option) => `
        <label class="check">
          <input type="checkbox" data-feature="${feature.name}" value="${escapeHtml(option)}"
            ${selected.includes(option) ? 'checked' : ''}> ${escapeHtml(option)}
        </label>`,
      )
      .join('');
    const free = feature.open
      ? `<input type="text" class="free-values" data-feature-free="${feature.name}"
           placeholder="extra values, comma-separated"
           value="${escapeHtml(selected.filter((v) => !catalog.includes(v)).join(', '))}">`
      : '';
    return `<div class="multi">${boxes}${free}</div>`;
  }
  if (feature.kind === 'record-list') {
    return `<div class="labels" data-feature="${feature.name}"></div>
      <button type="button" class="add-label" data-add-label="${feature.name}">Add label</button>`;
  }
  const inputType = feature.kind === 'integer' || feature.kind === 'real' ? 'number' : 'text';
  const step = feature.kind === 'real' ? ' step="0.1"' : '';
  const rendered = value === undefined || value === null ? '' : String(value);
  return `<input type="${inputType}"${step} data-feature="${feature.name}" value="${escapeHtml(rendered)}">`;
}

export function renderGroup(
  group: FeatureGroupDef,
  visible: Set<string>,
  state: ConfiguratorState,
): string {
  const rows = group.features
    .filter((feature) => visible.has(feature.name))
    .map(
      (feature) => `
      <div class="field" data-field="${feature.name}">
        <label class="field-name">${escapeHtml(feature.name)}${feature.mandatory === false ? '' : ' *'}</label>
        ${controlHtml(feature, state)}
        ${violationHtml(feature.name, state)}
      </div>`,
    )
    .join('');
  return `<section class="group"><h2>${escapeHtml(group.name)}</h2>${rows}</section>`;
}

export function renderProgress(state: ConsoleState): string {
  const badge = state.failed ? 'failed' : state.terminal ? 'done' : (state.phase ?? 'waiting');
  return `
    <div class="progress">
      <div class="progress-head">
        <span class="badge badge-${badge}">${badge}</span>
        <span class="cells">${state.completedCells}/${state.totalCells} cells</span>
      </div>
      <div class="pbar-wrap"><div class="pbar-fill" style="width:${state.percent}%"></div></div>
      <ul class="log">${state.messages
        .slice(-8)
        .map((message) => `<li>${escapeHtml(message)}</li>`)
        .join('')}</ul>
    </div>`;
}

export function renderScoreSeries(series: (number | null)[]): string {
  const values = series.filter((v): v is number => v !== null);
  const max = values.length ? Math.max(...values, 1e-9) : 1;
  const bars = series
    .map((value, i) => {
      const height = value === null ? 0 : Math.max(4, Math.round((100 * value) / max));
      const label = value === null ? 'n/a' : value.toFixed(3);
      return `<div class="bar" title="iteration ${i + 1}: ${label}" style="height:${height}%"></div>`;
    })
    .join('');
  return `<div class="score-chart">${bars}</div>`;
}

export function renderCurationStages(rows: CurationStageRow[]): string {
  const body = rows
    .map(
      (row) =>
        `<tr><td>${escapeHtml(row.stage)}</td><td>${row.kept}</td><td>${row.removed}</td></tr>`,
    )
    .join('');
  return `<table class="stages"><thead><tr><th>stage</th><th>kept</th><th>removed</th></tr></thead><tbody>${body}</tbody></table>`;
}
