// HTML/SVG string builders.  Kept DOM-free so tests can assert on output
// without a browser; app.ts injects the strings.

import type { GridInfo } from "./types.js";
import type { ViewModel } from "./viewmodel.js";

const RHO_COLORS: Record<string, string> = {
  ok: "#2e9e4f",
  warn: "#e09b20",
  over: "#d23b2f",
  out: "#9aa0a6",
};

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Single-line diagram: substations as nodes, lines colored by loading. */
export function renderNetworkSvg(grid: GridInfo, vm: ViewModel): string {
  const coords = grid.coords.substations ?? {};
  const fallback: Record<string, [number, number]> = {};
  grid.substations.forEach((sid, i) => {
    const angle = (2 * Math.PI * i) / grid.substations.length;
    fallback[sid] = [450 + 380 * Math.cos(angle), 310 + 260 * Math.sin(angle)];
  });
  const pos = (sid: string): [number, number] => coords[sid] ?? fallback[sid];

  const parts: string[] = [];
  parts.push(`<svg viewBox="0 0 900 640" xmlns="http://www.w3.org/2000/svg">`);
  for (const line of vm.lines) {
    const [x1, y1] = pos(line.from);
    const [x2, y2] = pos(line.to);
    const color = RHO_COLORS[line.cls];
    const dash = line.status ? "" : ` stroke-dasharray="6 5"`;
    const width = line.cls === "over" ? 5 : 3;
    parts.push(
      `<line data-line="${esc(line.id)}" class="line ${line.cls}" x1="${x1}" y1="${y1}" ` +
      `x2="${x2}" y2="${y2}" stroke="${color}" stroke-width="${width}"${dash}>` +
      `<title>${esc(line.id)} rho=${esc(line.rhoDisplay)} flow=${line.flowMw.toFixed(1)} MW</title></line>`
    );
    const mx = (x1 + x2) / 2;
    const my = (y1 + y2) / 2;
    parts.push(
      `<text data-rho-for="${esc(line.id)}" x="${mx}" y="${my - 4}" font-size="10" ` +
      `fill="${color}" text-anchor="middle">${esc(line.id)}</text>`
    );
  }
  for (const sid of grid.substations) {
    const [x, y] = pos(sid);
    parts.push(
      `<circle cx="${x}" cy="${y}" r="10" fill="#1f2a38" stroke="#cfd8e3"/>` +
      `<text x="${x}" y="${y + 24}" font-size="11" fill="#cfd8e3" text-anchor="middle">${esc(sid)}</text>`
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

export function renderScoreHeader(vm: ViewModel): string {
  const banner = vm.done
    ? `<span class="banner final">episode finished – final score ${vm.scoreSoFar.toFixed(2)}</span>`
    : "";
  return (
    `<span>scenario <b>${esc(vm.scenario)}</b></span>` +
    `<span>step <b>${vm.step}</b> / ${vm.nSteps}</span>` +
    `<span>score so far <b>${vm.scoreSoFar.toFixed(2)}</b></span>` +
    `<span>max rho <b>${vm.maxRho.toFixed(3)}</b></span>` +
    banner
  );
}

export function renderLineTable(vm: ViewModel): string {
  const rows = vm.lines
    .map(
      (l) =>
        `<tr class="${l.cls}"><td>${esc(l.id)}</td><td>${l.status ? "on" : "off"}</td>` +
        `<td class="rho" data-line="${esc(l.id)}">${esc(l.rhoDisplay)}</td>` +
        `<td>${l.flowMw.toFixed(2)}</td><td>${l.cooldown}</td></tr>`
    )
    .join("");
  return (
    `<table><thead><tr><th>line</th><th>status</th><th>rho</th>` +
    `<th>flow MW</th><th>cooldown</th></tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderGeneratorTable(vm: ViewModel): string {
  const rows = vm.generators
    .map((g) => {
      const potential = g.potential_mw === null ? "–" : g.potential_mw.toFixed(1);
      const cap = g.curtail_cap === null ? "–" : g.curtail_cap.toFixed(2);
      return (
        `<tr><td>${esc(g.id)}</td><td>${esc(g.type)}</td>` +
        `<td>${g.p_mw.toFixed(1)}</td><td>${potential}</td><td>${cap}</td></tr>`
      );
    })
    .join("");
  return (
    `<table><thead><tr><th>generator</th><th>type</th><th>output MW</th>` +
    `<th>potential MW</th><th>cap</th></tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderStorageTable(vm: ViewModel): string {
  const rows = vm.storages
    .map(
      (s) =>
        `<tr><td>${esc(s.id)}</td><td>${s.energy_mwh.toFixed(2)} / ${s.e_max_mwh}</td>` +
        `<td>${s.power_mw.toFixed(2)}</td></tr>`
    )
    .join("");
  return (
    `<table><thead><tr><th>storage</th><th>energy MWh</th><th>power MW</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderPreview(vm: ViewModel): string {
  if (!vm.preview) return "<p class='hint'>simulate an action to preview its effect</p>";
  const p = vm.preview;
  const obs = p.observation;
  const worst = [...obs.lines].sort((a, b) => b.rho - a.rho).slice(0, 5);
  const rows = worst
    .map((l) => `<tr><td>${esc(l.id)}</td><td>${esc(l.rho_display)}</td></tr>`)
    .join("");
  const fate = p.done ? `<b class="over">would end the episode</b>` : "continues";
  return (
    `<p>predicted: reward ${p.reward.toFixed(3)}, ${fate}, ` +
    `max rho ${obs.max_rho.toFixed(3)}</p>` +
    `<table><thead><tr><th>worst lines</th><th>rho</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}
