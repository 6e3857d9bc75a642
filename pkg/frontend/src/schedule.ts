// Stimulus schedule preview: the studio renders the ribbon from the
// gateway's preview endpoint and cross-checks the closed-form total locally
// ((cue + buffer) * trials + fixation).

export interface ErpPreviewSpec {
  cue_time_s: number;
  buffer_time_s: number;
  fixation_time_s: number;
  n_classes: number;
  trial_count: number;
  weights: number[];
  seed?: number;
}

export interface RibbonEvent {
  t_on: number;
  t_off: number;
  label: string;
  class_id: number | null;
}

export interface Ribbon {
  events: RibbonEvent[];
  duration_s: number;
  legend: { class_id: number; weight: number; count: number }[];
}

export function closedFormDuration(spec: ErpPreviewSpec): number {
  return (spec.cue_time_s + spec.buffer_time_s) * spec.trial_count
    + spec.fixation_time_s;
}

export function buildRibbon(
  spec: ErpPreviewSpec,
  events: RibbonEvent[],
  counts: number[],
): Ribbon {
  return {
    events,
    duration_s: closedFormDuration(spec),
    legend: spec.weights.map((weight, class_id) => ({
      class_id,
      weight,
      count: counts[class_id] ?? 0,
    })),
  };
}

export function emptyRibbon(): Ribbon {
  return { events: [], duration_s: 0, legend: [] };
}

const CLASS_COLORS = ["#e4572e", "#3fa7d6", "#76b041", "#ffc914", "#9b5de5"];

export function renderRibbon(container: HTMLElement, ribbon: Ribbon): void {
  container.innerHTML = "";
  const total = ribbon.duration_s || 1;
  const bar = document.createElement("div");
  bar.className = "ribbon";
  for (const e of ribbon.events) {
    const seg = document.createElement("div");
    seg.className = "ribbon-event";
    seg.style.left = `${(e.t_on / total) * 100}%`;
    seg.style.width = `${(Math.max(e.t_off - e.t_on, 0.002 * total) / total) * 100}%`;
    seg.style.background = CLASS_COLORS[(e.class_id ?? 0) % CLASS_COLORS.length];
    seg.title = `${e.label} @ ${e.t_on.toFixed(2)}s`;
    bar.appendChild(seg);
  }
  container.appendChild(bar);
  const legend = document.createElement("div");
  legend.className = "legend";
  for (const item of ribbon.legend) {
    const chip = document.createElement("span");
    chip.className = "legend-chip";
    chip.style.background = CLASS_COLORS[item.class_id % CLASS_COLORS.length];
    chip.textContent = ` class ${item.class_id}: w=${item.weight} n=${item.count} `;
    legend.appendChild(chip);
  }
  const totalLabel = document.createElement("span");
  totalLabel.className = "ribbon-total";
  totalLabel.textContent = `total ${ribbon.duration_s.toFixed(3)} s`;
  legend.appendChild(totalLabel);
  container.appendChild(legend);
}
