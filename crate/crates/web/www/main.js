import init, { zero_hopf, zeros, orbit } from "./pkg/zerohopf_web.js";

const fmt = (v) => (Math.abs(v) < 1e-12 ? "0" : v.toPrecision(8));
const cplx = ([re, im]) => (im === 0 ? fmt(re) : `${fmt(re)} ${im < 0 ? "-" : "+"} ${fmt(Math.abs(im))}i`);

function table(head, rows) {
  const t = document.createElement("table");
  const tr = t.insertRow();
  for (const h of head) {
    const th = document.createElement("th");
    th.textContent = h;
    tr.appendChild(th);
  }
  for (const r of rows) {
    const row = t.insertRow();
    for (const c of r) row.insertCell().textContent = c;
  }
  return t;
}

function show(el, ...nodes) {
  el.replaceChildren(...nodes);
}

function error(el, e) {
  const p = document.createElement("p");
  p.className = "err";
  p.textContent = String(e.message ?? e);
  show(el, p);
}

function specFromForm() {
  const f = new FormData(document.getElementById("spec-form"));
  const cs = f.get("case");
  const spec = { case: cs, c: +f.get("c"), a1: +f.get("a1"), b1: +f.get("b1") };
  if (cs !== "ii") Object.assign(spec, { omega: +f.get("omega"), d1: +f.get("d1") });
  if (cs === "i") spec.e1 = +f.get("e1");
  if (cs === "ii") spec.d = +f.get("d");
  if (cs !== "i") spec.e = +f.get("e");
  if (cs === "iii") spec.branch = f.get("branch");
  return JSON.stringify(spec);
}

function syncCaseFields() {
  const cs = document.querySelector("#spec-form [name=case]").value;
  for (const l of document.querySelectorAll("#spec-form [data-cases]")) {
    l.style.display = l.dataset.cases.split(" ").includes(cs) ? "" : "none";
  }
}

function plot(canvas, pts, xl, yl) {
  const ctx = canvas.getContext("2d");
  const { width: W, height: H } = canvas;
  ctx.clearRect(0, 0, W, H);
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const span = (v) => {
    const lo = Math.min(...v);
    const hi = Math.max(...v);
    const pad = (hi - lo || Math.abs(hi) || 1) * 0.08;
    return [lo - pad, hi + pad];
  };
  const [x0, x1] = span(xs);
  const [y0, y1] = span(ys);
  const m = 40;
  const X = (x) => m + ((x - x0) / (x1 - x0)) * (W - 2 * m);
  const Y = (y) => H - m - ((y - y0) / (y1 - y0)) * (H - 2 * m);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(m, m, W - 2 * m, H - 2 * m);
  ctx.fillStyle = "#333";
  ctx.font = "12px system-ui";
  ctx.fillText(xl, W / 2, H - 10);
  ctx.fillText(yl, 8, H / 2);
  ctx.fillText(x0.toExponential(2), m, H - m + 14);
  ctx.fillText(x1.toExponential(2), W - m - 50, H - m + 14);
  ctx.fillText(y1.toExponential(2), m + 4, m - 6);
  ctx.strokeStyle = "#1761a0";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(X(x), Y(y)) : ctx.moveTo(X(x), Y(y))));
  ctx.stroke();
  ctx.fillStyle = "#c33";
  ctx.beginPath();
  ctx.arc(X(pts[0][0]), Y(pts[0][1]), 3, 0, 2 * Math.PI);
  ctx.fill();
}

async function main() {
  await init();
  syncCaseFields();
  document.querySelector("#spec-form [name=case]").addEventListener("change", syncCaseFields);

  document.getElementById("zh-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const out = document.getElementById("zh-out");
    const f = new FormData(ev.target);
    try {
      const r = JSON.parse(zero_hopf(f.get("case"), +f.get("c"), +f.get("omega")));
      show(
        out,
        table(["a", "b", "c", "d", "e", "ω"], [[r.a, r.b, r.c, r.d, r.e, r.omega].map(fmt)]),
        table(["equilibrium", "eigenvalues", "certified", "residual"], [
          [`(${r.equilibrium.map(fmt).join(", ")})`, r.eigenvalues.map(cplx).join(", "), r.certified ? "yes" : "no", r.residual === null ? "-" : r.residual.toExponential(2)],
        ]),
      );
    } catch (e) {
      error(out, e);
    }
  });

  document.getElementById("spec-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const out = document.getElementById("zeros-out");
    try {
      const zs = JSON.parse(zeros(specFromForm()));
      const orbits = zs.reduce((n, z) => n + z.orbit_count, 0);
      const p = document.createElement("p");
      p.textContent = `${zs.length} zeros, ${orbits} bifurcating periodic orbits.`;
      show(
        out,
        p,
        table(
          ["zero", "r", "z", "w", "det J", "eigenvalues", "verdict"],
          zs.map((z) => [z.label, ...z.location.map(fmt), fmt(z.det), z.eigenvalues.map(cplx).join(", "), z.trivial ? "trivial" : z.verdict]),
        ),
      );
    } catch (e) {
      error(out, e);
    }
  });

  document.getElementById("orbit-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const out = document.getElementById("orbit-out");
    const f = new FormData(ev.target);
    out.textContent = "shooting...";
    // let the status paint before the blocking computation
    setTimeout(() => {
      try {
        const r = JSON.parse(orbit(specFromForm(), +f.get("eps"), f.get("label").trim()));
        show(
          out,
          table(["zero", "period", "closure", "Floquet multipliers", "verdict", "averaged verdict"], [
            [r.label, fmt(r.period), r.closure_residual.toExponential(2), r.multipliers.map(cplx).join(", "), r.verdict, r.averaged_verdict],
          ]),
        );
        plot(document.getElementById("plot-xy"), r.samples.map((s) => [s[1], s[2]]), "x", "y");
        plot(document.getElementById("plot-zw"), r.samples.map((s) => [s[3], s[4]]), "z", "w");
      } catch (e) {
        error(out, e);
      }
    }, 10);
  });
}

main();
