"""qfs command line: archive generation, QUBO building, solving, spectral
diagnostics and report emission (CSV tables plus rendered figures)."""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, analytics, plotting, qubo, solvers
from .annealer import AnnealSchedule, anneal_select, evolve, fidelity
from .archive import SyntheticConfig, gen_synthetic, read_archive, write_archive
from .hilbert import MAX_QUBITS
from .qubo import EmptySelection, QuboInstance, build_instance, read_instances, write_instances
from .selection import SelectionResult, read_selections, write_selections
from .solvers import SaParams, brute_force, simulated_anneal
from .spectrum import fit_gap_scaling, fit_landau_zener, gap_trace


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_gen_synthetic(args) -> int:
    cfg = SyntheticConfig(
        num_classes=args.num_classes,
        images_per_class=args.images_per_class,
        num_feature_maps=args.nf,
        fm_height=args.hf,
        fm_width=args.wf,
        sparsity=args.sparsity,
        seed=args.seed,
    )
    archive = gen_synthetic(cfg)
    write_archive(archive, args.out)
    _log(f"wrote {archive.header.record_count} records to {args.out}")
    return 0


def cmd_build(args) -> int:
    archive = read_archive(args.archive)
    instances, skipped = [], []
    for rec in archive.records:
        try:
            instances.append(build_instance(rec, args.beta))
        except EmptySelection:
            skipped.append(rec.image_id)
    write_instances(instances, args.out)
    _log(f"built {len(instances)} QUBO instances ({len(skipped)} skipped: d=0)")
    return 0


def _parse_shots(text: str):
    return None if text == "auto" else int(text)


def cmd_anneal(args) -> int:
    instances = read_instances(args.qubo)
    schedule = AnnealSchedule(tau=args.tau, ds=args.ds)
    results = []
    for k, inst in enumerate(instances):
        if inst.d > MAX_QUBITS:
            _log(f"{inst.image_id}: d={inst.d} above quantum cap, skipping (use solve --method sa)")
            continue
        results.append(
            anneal_select(
                inst,
                schedule,
                method=args.method,
                n_shots=_parse_shots(args.shots),
                seed=args.seed + k,
                pick=args.pick,
            )
        )
    write_selections(results, args.out)
    _log(f"annealed {len(results)} instances -> {args.out}")
    return 0


def cmd_solve(args) -> int:
    instances = read_instances(args.qubo)
    results = []
    for inst in instances:
        if args.method == "exact":
            results.append(brute_force(inst))
        else:
            params = SaParams(num_reads=args.reads, num_sweeps=args.sweeps, seed=args.seed)
            results.append(simulated_anneal(inst, params))
    write_selections(results, args.out)
    _log(f"solved {len(results)} instances -> {args.out}")
    return 0


def cmd_spectrum(args) -> int:
    instances = read_instances(args.qubo)
    schedule = AnnealSchedule(tau=args.tau, ds=args.ds)
    out = Path(args.out)
    summary_path = out.with_suffix(".summary.csv")
    with open(out, "w", newline="") as f, open(summary_path, "w", newline="") as g:
        w = csv.writer(f)
        w.writerow(["image_id", "s", "E0", "E1"])
        ws = csv.writer(g)
        ws.writerow(["image_id", "d", "delta_min", "s_min", "ground_degeneracy"])
        for inst in instances:
            trace = gap_trace(inst, schedule)
            for s, e0, e1 in zip(trace.s_grid, trace.e0, trace.e1):
                w.writerow([inst.image_id, f"{s:.6g}", f"{e0:.12g}", f"{e1:.12g}"])
            ws.writerow(
                [inst.image_id, inst.d, f"{trace.delta_min:.12g}", f"{trace.s_min:.6g}", trace.ground_degeneracy_at_end]
            )
            if len(instances) == 1:
                plotting.save_spectrum_trace(trace.s_grid, trace.e0, trace.e1, out.with_suffix(".svg"))
    _log(f"spectrum traces -> {out} (summary: {summary_path})")
    return 0


def cmd_fit(args) -> int:
    rows = list(csv.DictReader(open(args.infile)))
    if args.kind == "lz":
        pts = [(float(r["delta_min"]), float(r["fidelity"])) for r in rows]
        fit = fit_landau_zener(pts)
        doc = {"kind": "landau-zener", "lambda": fit.lam, "residual": fit.residual, "n_used": fit.n_used}
    else:
        samples: dict[int, list[float]] = {}
        for r in rows:
            samples.setdefault(int(r["d"]), []).append(float(r["delta_min"]))
        fit = fit_gap_scaling(samples)
        doc = {
            "kind": "gap-scaling",
            "exponent": fit.exponent,
            "intercept": fit.intercept,
            "per_d_means": fit.per_d_means,
            "per_d_quartiles": fit.per_d_quartiles,
            "hardest_instances": fit.hardest_instances,
        }
    with open(args.out, "w") as f:
        json.dump(doc, f, indent=1)
    _log(f"{args.kind} fit -> {args.out}")
    return 0


def _write_matrix_csv(path: Path, mat: np.ndarray) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["class"] + [str(c) for c in range(mat.shape[1])])
        for i, row in enumerate(mat):
            w.writerow([i] + [f"{v:.6g}" for v in row])


def cmd_correlate(args) -> int:
    archive = read_archive(args.archive)
    selections = read_selections(args.selections)
    dists = analytics.class_distributions(
        selections, archive.header.num_classes, archive.header.num_feature_maps
    )
    corr = analytics.correlation_matrix(dists)
    out = Path(args.out)
    _write_matrix_csv(out, corr.bc)
    _write_matrix_csv(out.with_name(out.stem + "_displayed.csv"), corr.displayed())
    plotting.save_correlation_heatmap(corr.bc, out.with_suffix(".svg"))
    _log(f"correlation matrix -> {out}")
    return 0


def _write_pgm(path: Path, heat: np.ndarray) -> None:
    data = np.round(255.0 * np.clip(heat, 0.0, 1.0)).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode())
        f.write(data.tobytes())


def cmd_heatmap(args) -> int:
    archive = read_archive(args.archive)
    selections = {s.image_id: s for s in read_selections(args.selections)}
    record = next((r for r in archive.records if r.image_id == args.image), None)
    if record is None:
        _log(f"no record {args.image!r} in archive")
        return 1
    if args.image not in selections:
        _log(f"no selection for {args.image!r}")
        return 1
    alpha = qubo.importance(record)
    _, imp = qubo.filter_positive(record, alpha)
    upsample = None
    if args.upsample:
        h, w = args.upsample.lower().split("x")
        upsample = (int(h), int(w))
    emap = analytics.heatmap(record, imp, selections[args.image], upsample_to=upsample)
    heat = emap.upsampled if emap.upsampled is not None else emap.heat
    out = Path(args.out)
    if out.suffix == ".pgm":
        _write_pgm(out, heat)
    else:
        np.savetxt(out, heat, delimiter=",", fmt="%.6g")
    _log(f"heatmap for {args.image} -> {out} (all_zero={emap.all_zero})")
    return 0


def _solve_one(inst: QuboInstance, args, schedule: AnnealSchedule, seed: int):
    """Solve one instance with the configured method, honoring the d cap."""
    method = args.method
    fallback = False
    if method == "qa" and inst.d > MAX_QUBITS:
        method, fallback = "sa", True
    if method == "qa":
        state = evolve(inst, schedule, method="trotter2")
        fid = fidelity(state, inst)
        sel = anneal_select(inst, schedule, n_shots=_parse_shots(args.shots), seed=seed)
        return sel, fid, fallback
    if method == "sa":
        sel = simulated_anneal(inst, SaParams(num_reads=args.reads, num_sweeps=args.sweeps, seed=seed))
        return sel, None, fallback
    return brute_force(inst), None, fallback


def cmd_run(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    archive = read_archive(args.archive)
    taus = [float(t) for t in args.tau.split(",")]
    schedule = AnnealSchedule(tau=taus[0], ds=args.ds)

    instances, skipped, failures = [], [], []
    for rec in archive.records:
        try:
            instances.append(build_instance(rec, args.beta))
        except EmptySelection:
            skipped.append(rec.image_id)
    write_instances(instances, out / "qubos.jsonl")

    results: list[SelectionResult] = []
    fidelities: dict[float, list[float]] = {t: [] for t in taus}
    per_image = []
    gap_rows = []
    for k, inst in enumerate(instances):
        try:
            sel, fid, fallback = _solve_one(inst, args, schedule, args.seed + k)
            results.append(sel)
            entry = {
                "image_id": inst.image_id,
                "class": inst.class_label,
                "d": inst.d,
                "method": sel.method,
                "qa_fallback_to_sa": fallback,
                "energy": sel.energy,
            }
            if fid is not None:
                entry["fidelity"] = fid
                fidelities[taus[0]].append(fid)
                for t in taus[1:]:
                    st = evolve(inst, AnnealSchedule(tau=t, ds=args.ds))
                    fidelities[t].append(fidelity(st, inst))
            if not args.skip_spectrum and inst.d <= MAX_QUBITS:
                trace = gap_trace(inst, schedule)
                entry["delta_min"] = trace.delta_min
                entry["s_min"] = trace.s_min
                gap_rows.append(
                    (inst.image_id, inst.d, trace.delta_min, trace.s_min, trace.ground_degeneracy_at_end)
                )
            per_image.append(entry)
        except Exception as exc:  # fail-soft batch: record and continue
            failures.append({"image_id": inst.image_id, "error": str(exc)})

    write_selections(results, out / "selections.jsonl")

    dists = analytics.class_distributions(
        results, archive.header.num_classes, archive.header.num_feature_maps
    )
    corr = analytics.correlation_matrix(dists)
    _write_matrix_csv(out / "correlation_raw.csv", corr.bc)
    _write_matrix_csv(out / "correlation_displayed.csv", corr.displayed())
    plotting.save_correlation_heatmap(corr.bc, out / "correlation.svg")

    if gap_rows:
        with open(out / "gaps.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["image_id", "d", "delta_min", "s_min", "ground_degeneracy"])
            w.writerows(gap_rows)
        deltas = [r[2] for r in gap_rows]
        vals = np.sort(deltas)
        with open(out / "gap_distribution.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["delta_min", "cumulative_fraction"])
            for i, v in enumerate(vals):
                w.writerow([f"{v:.12g}", f"{(i + 1) / vals.size:.6g}"])
        plotting.save_gap_distribution(deltas, out / "gap_distribution.svg")

    j_values = np.concatenate(
        [inst.J[np.triu_indices(inst.d, k=1)] for inst in instances if inst.d >= 2]
    ) if instances else np.array([])
    if j_values.size >= 30:
        mu, sigma, (edges, counts) = analytics.fit_j_distribution(j_values)
        with open(out / "j_histogram.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["bin_left", "bin_right", "count"])
            for i, c in enumerate(counts):
                w.writerow([f"{edges[i]:.6g}", f"{edges[i + 1]:.6g}", c])
        with open(out / "j_fit.json", "w") as f:
            json.dump({"mu": mu, "sigma": sigma, "n": int(j_values.size)}, f, indent=1)
        plotting.save_coupling_distribution(j_values, mu, sigma, out / "j_distribution.svg")

    if len(taus) > 1 and any(fidelities[t] for t in taus):
        with open(out / "fidelity_vs_tau.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["tau", "median_fidelity", "q1", "q3", "n"])
            for t in taus:
                if fidelities[t]:
                    w.writerow(
                        [
                            t,
                            f"{np.median(fidelities[t]):.6g}",
                            f"{np.percentile(fidelities[t], 25):.6g}",
                            f"{np.percentile(fidelities[t], 75):.6g}",
                            len(fidelities[t]),
                        ]
                    )
        plotting.save_fidelity_vs_tau({t: v for t, v in fidelities.items() if v}, out / "fidelity_vs_tau.svg")

    manifest = {
        "qfs_version": __version__,
        "python": platform.python_version(),
        "config": {
            "archive": str(args.archive),
            "beta": args.beta,
            "tau": taus,
            "ds": args.ds,
            "shots": args.shots,
            "method": args.method,
            "seed": args.seed,
            "threads": args.threads,
        },
        "record_count": archive.header.record_count,
        "results": len(results),
        "skipped_empty_selection": skipped,
        "failures": failures,
        "per_image": per_image,
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=1)
    _log(
        f"pipeline done: {len(results)} results, {len(skipped)} skipped, "
        f"{len(failures)} failures -> {out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qfs", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="write a synthetic feature-map archive")
    p.add_argument("--num-classes", type=int, default=2)
    p.add_argument("--images-per-class", type=int, default=10)
    p.add_argument("--nf", type=int, default=16)
    p.add_argument("--hf", type=int, default=7)
    p.add_argument("--wf", type=int, default=7)
    p.add_argument("--sparsity", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("build", help="archive -> QUBO instances (JSON lines)")
    p.add_argument("--archive", required=True)
    p.add_argument("--beta", type=float, default=0.7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("anneal", help="simulate quantum annealing on QUBO instances")
    p.add_argument("--qubo", required=True)
    p.add_argument("--tau", type=float, default=50.0)
    p.add_argument("--ds", type=float, default=0.01)
    p.add_argument("--shots", default="auto", help="'auto' (= d^2) or an integer")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["trotter2", "exact_step"], default="trotter2")
    p.add_argument("--pick", choices=["mode", "argmax"], default="mode")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_anneal)

    p = sub.add_parser("solve", help="classical solvers (exact enumeration or SA)")
    p.add_argument("--qubo", required=True)
    p.add_argument("--method", choices=["exact", "sa"], default="sa")
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("spectrum", help="E0/E1 traces and minimum-gap summary")
    p.add_argument("--qubo", required=True)
    p.add_argument("--tau", type=float, default=50.0)
    p.add_argument("--ds", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("fit", help="Landau-Zener or gap-scaling fits")
    p.add_argument("--kind", choices=["lz", "gap-scaling"], required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("correlate", help="class-class Bhattacharyya correlation matrix")
    p.add_argument("--selections", required=True)
    p.add_argument("--archive", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("heatmap", help="explanation heatmap for one image")
    p.add_argument("--archive", required=True)
    p.add_argument("--selections", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--upsample", default=None, help="e.g. 224x224")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("run", help="full pipeline: archive -> QUBO -> solve -> reports")
    p.add_argument("--archive", required=True)
    p.add_argument("--beta", type=float, default=0.7)
    p.add_argument("--tau", default="50", help="annealing time, comma list for a tau sweep")
    p.add_argument("--ds", type=float, default=0.01)
    p.add_argument("--shots", default="auto")
    p.add_argument("--method", choices=["qa", "sa", "exact"], default="qa")
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--skip-spectrum", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
