/** Fixed label-to-color mapping so screenshots stay reproducible. */

export const LABEL_COLORS: Record<string, string> = {
  gunshot: "#d62728",
  explosion: "#ff7f0e",
  speech: "#1f77b4",
  siren: "#9467bd",
  alarm: "#8c564b",
  scream: "#e377c2",
  emergency_vehicle: "#2ca02c",
  impulse: "#bcbd22",
  sustained_tone: "#17becf",
};

/** Unknown labels get a deterministic hue from a string hash. */
export function labelColor(label: string): string {
  const fixed = LABEL_COLORS[label];
  if (fixed) return fixed;
  let h = 0;
  for (let i = 0; i < label.length; i++) h = (h * 31 + label.charCodeAt(i)) >>> 0;
  return `hsl(${h % 360}, 65%, 45%)`;
}
