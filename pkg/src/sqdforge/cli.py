"""Pipeline driver: sample, solve, extrapolate, report, diagnostics.

Each subcommand reads a species manifest, runs one stage for one or all
species, and writes its outputs under a working directory. Stages talk to
each other only through those files, every output embeds the seeds that
produced it, and reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .benchstats import (
    DEFAULT_ZETA_LADDER,
    ccsd_param_count,
    energy_errors,
    reaction_energy_errors,
    sample_diagnostics,
    stat_profile,
    subspace_plan,
)
from .determinants import Determinant
from .errors import (
    ConfigurationError,
    ConvergenceError,
    RecoveryError,
    SqdforgeError,
)
from .extrapolate import gev_extrapolate, lmm_fit
from .fileio import (
    canonical_json,
    read_amplitudes,
    read_reactions,
    read_samples,
    read_wavefunction,
    write_samples,
    write_wavefunction,
)
from .integrals import parse_fcidump
from .lucj import NoiseModel, build_lucj_params, estimate_resources, sample_bitstrings, simulate_lucj_state
from .recovery import SqdPlan, run_sqd
from .rng import stream_seed

__all__ = ["SpeciesRecord", "Manifest", "load_manifest", "main"]

EXTRAPOLATION_METHODS = ("gev", "lmm", "ols")


class _UsageError(Exception):
    """Command-line misuse detected after argparse (exit code 1)."""


@dataclass(frozen=True)
class SpeciesRecord:
    """One molecule: where its inputs live and what sector it occupies."""

    id: str
    fcidump: Path
    amplitudes: Path
    n_alpha: int
    n_beta: int
    m: int
    reference_energies: dict[str, float]


@dataclass(frozen=True)
class Manifest:
    """Parsed manifest: species records plus pipeline-wide settings."""

    species: tuple[SpeciesRecord, ...]
    zetas: tuple[float, ...]
    batches: int
    shots: int
    noise: NoiseModel
    seed: int
    max_iter: int
    reactions: Path | None

    def record(self, species_id: str) -> SpeciesRecord:
        for record in self.species:
            if record.id == species_id:
                return record
        raise _UsageError(f"species {species_id!r} is not in the manifest")


def load_manifest(path: str | Path) -> Manifest:
    """Load and validate a manifest JSON file.

    Paths inside the manifest are resolved relative to its directory, and
    every referenced file must exist.
    """
    path = Path(path)
    payload = json.loads(path.read_text())
    root = path.parent
    records = []
    seen = set()
    for entry in payload.get("species", []):
        record = SpeciesRecord(
            id=entry["id"],
            fcidump=root / entry["fcidump"],
            amplitudes=root / entry["amplitudes"],
            n_alpha=int(entry["n_alpha"]),
            n_beta=int(entry["n_beta"]),
            m=int(entry["m"]),
            reference_energies={k: float(v) for k, v in entry.get("reference_energies", {}).items()},
        )
        if record.id in seen:
            raise ConfigurationError(f"duplicate species id {record.id!r}")
        seen.add(record.id)
        for file in (record.fcidump, record.amplitudes):
            if not file.is_file():
                raise FileNotFoundError(f"species {record.id!r} references missing file {file}")
        records.append(record)
    if not records:
        raise ConfigurationError("manifest lists no species")
    noise_entry = payload.get("noise", {})
    reactions = payload.get("reactions")
    if reactions is not None:
        reactions = root / reactions
        if not reactions.is_file():
            raise FileNotFoundError(f"manifest references missing reactions file {reactions}")
    return Manifest(
        species=tuple(records),
        zetas=tuple(float(z) for z in payload.get("zetas", DEFAULT_ZETA_LADDER)),
        batches=int(payload.get("batches", 1)),
        shots=int(payload.get("shots", 1_000_000)),
        noise=NoiseModel(
            p_flip=float(noise_entry.get("p_flip", 0.0)),
            p_depol=float(noise_entry.get("p_depol", 0.0)),
        ),
        seed=int(payload.get("seed", 0)),
        max_iter=int(payload.get("max_iter", 5)),
        reactions=reactions,
    )


def _zeta_label(zeta: float) -> str:
    return format(zeta, "g")


def _sample_path(out: Path, species_id: str) -> Path:
    return out / f"{species_id}.samples.txt"


def _result_path(out: Path, species_id: str) -> Path:
    return out / f"{species_id}.result.json"


def _load_species_inputs(record: SpeciesRecord):
    """Amplitudes and LUCJ parameters for one species, shape-checked."""
    t2, t1, m, n_occ_alpha, n_occ_beta = read_amplitudes(record.amplitudes.read_text())
    if (m, n_occ_alpha, n_occ_beta) != (record.m, record.n_alpha, record.n_beta):
        raise ConfigurationError(
            f"species {record.id!r}: amplitude file header ({m}, {n_occ_alpha}, "
            f"{n_occ_beta}) disagrees with the manifest"
        )
    return build_lucj_params(t2, t1, m, n_occ_alpha, n_occ_beta)


def cmd_sample(manifest: Manifest, record: SpeciesRecord, args) -> list[str]:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    shots = manifest.shots if args.shots is None else args.shots
    noise = NoiseModel(
        p_flip=manifest.noise.p_flip if args.p_flip is None else args.p_flip,
        p_depol=manifest.noise.p_depol if args.p_depol is None else args.p_depol,
    )
    seed_root = manifest.seed if args.seed is None else args.seed
    seed = stream_seed(seed_root, "sample", record.id)
    params = _load_species_inputs(record)
    reference = Determinant(alpha=(1 << record.n_alpha) - 1, beta=(1 << record.n_beta) - 1)
    state = simulate_lucj_state(params, reference, (record.m, record.n_alpha, record.n_beta))
    samples = sample_bitstrings(state, shots, noise, seed)
    path = _sample_path(out, record.id)
    path.write_text(write_samples(samples))
    diag = sample_diagnostics(samples, record.n_alpha, record.n_beta, record.m)
    return [
        f"wrote {path}",
        f"{record.id}: p_hw={diag.p_hw:.6f} p_unif={diag.p_unif:.6g} f_sz={diag.f_sz:+.6f}",
    ]


def cmd_solve(manifest: Manifest, record: SpeciesRecord, args) -> list[str]:
    out = Path(args.out)
    (out / "wf").mkdir(parents=True, exist_ok=True)
    zetas = tuple(args.zeta) if args.zeta else manifest.zetas
    labels = [_zeta_label(z) for z in zetas]
    if len(set(labels)) != len(labels):
        raise ConfigurationError(f"zeta labels collide: {labels}")
    batches = manifest.batches if args.batches is None else args.batches
    max_iter = manifest.max_iter if args.max_iter is None else args.max_iter
    seed_root = manifest.seed if args.seed is None else args.seed

    ints = parse_fcidump(record.fcidump.read_text())
    if (ints.M, ints.n_alpha, ints.n_beta) != (record.m, record.n_alpha, record.n_beta):
        raise ConfigurationError(
            f"species {record.id!r}: FCIDUMP sector ({ints.M}, {ints.n_alpha}, "
            f"{ints.n_beta}) disagrees with the manifest"
        )
    sample_file = _sample_path(out, record.id)
    if not sample_file.is_file():
        raise FileNotFoundError(
            f"no sample file {sample_file}; run `sqdforge sample` for species "
            f"{record.id!r} first"
        )
    samples = read_samples(sample_file.read_text())

    n_ccsd = ccsd_param_count(record.n_alpha, record.n_beta, record.m)
    full_dim = math.comb(record.m, record.n_alpha) * math.comb(record.m, record.n_beta)
    dims = subspace_plan(n_ccsd, zetas, full_dim)

    messages = []
    zeta_payload = {}
    for zeta, label, d in zip(zetas, labels, dims):
        plan = SqdPlan(
            d=d,
            K=batches,
            max_iter=max_iter,
            zeta=zeta,
            seed=stream_seed(seed_root, "solve", record.id, label),
        )
        try:
            result = run_sqd(samples, ints, plan)
        except (ConvergenceError, RecoveryError) as exc:
            raise type(exc)(f"species {record.id!r}, zeta {label}: {exc}") from exc
        wf_paths = []
        for b, psi in enumerate(result.batch_wavefunctions):
            wf_path = out / "wf" / f"{record.id}.z{label}.b{b}.wf"
            wf_path.write_text(write_wavefunction(psi, record.n_alpha, record.n_beta))
            wf_paths.append(str(wf_path.relative_to(out)))
        final = result.occupation_history[-1]
        zeta_payload[label] = {
            "zeta": zeta,
            "d": d,
            "energy": result.energy,
            "energies": [float(p.energy) for p in result.batch_points],
            "variances": [float(p.variance) for p in result.batch_points],
            "min_energies": [float(e) for e in result.min_energies],
            "iterations": result.iterations,
            "converged": result.converged,
            "occupations": [[float(x) for x in row] for row in final.n],
            "wavefunctions": wf_paths,
        }
    payload = {
        "species": record.id,
        "m": record.m,
        "n_alpha": record.n_alpha,
        "n_beta": record.n_beta,
        "n_ccsd": n_ccsd,
        "full_dim": full_dim,
        "seed": seed_root,
        "plan": {"batches": batches, "max_iter": max_iter},
        "zetas": zeta_payload,
        "energy": min(entry["energy"] for entry in zeta_payload.values()),
    }
    path = _result_path(out, record.id)
    path.write_text(canonical_json(payload))
    messages.append(f"wrote {path}")
    return messages


def _result_points(payload: dict) -> list[dict]:
    """Flatten a result JSON into per-batch (zeta, variance, energy) rows."""
    rows = []
    for label in sorted(payload["zetas"], key=lambda k: payload["zetas"][k]["zeta"]):
        entry = payload["zetas"][label]
        for b, (energy, variance) in enumerate(zip(entry["energies"], entry["variances"])):
            rows.append(
                {"zeta": entry["zeta"], "batch": b, "variance": variance, "energy": energy}
            )
    return rows


def cmd_extrapolate(manifest: Manifest, record: SpeciesRecord, args) -> list[str]:
    out = Path(args.out)
    seed_root = manifest.seed if args.seed is None else args.seed
    result_file = _result_path(out, record.id)
    if not result_file.is_file():
        raise FileNotFoundError(
            f"no result file {result_file}; run `sqdforge solve` for species "
            f"{record.id!r} first"
        )
    payload = json.loads(result_file.read_text())
    rows = _result_points(payload)

    if args.method == "gev":
        ints = parse_fcidump(record.fcidump.read_text())
        grouped = {}
        for label, entry in payload["zetas"].items():
            states = []
            for rel in entry["wavefunctions"]:
                wf_file = out / rel
                if not wf_file.is_file():
                    raise FileNotFoundError(
                        f"missing wavefunction store {wf_file}; re-run `sqdforge solve` "
                        f"for species {record.id!r} to regenerate it"
                    )
                psi, _, _ = read_wavefunction(wf_file.read_text())
                states.append(psi)
            grouped[entry["zeta"]] = states
        result = gev_extrapolate(grouped, ints, args.epsilon)
    else:
        points = [(row["variance"], row["energy"]) for row in rows]
        n_clusters = args.clusters if args.method == "lmm" else 1
        seed = stream_seed(seed_root, "extrapolate", record.id) % 2**32
        result = lmm_fit(points, n_clusters=n_clusters, seed=seed)

    report = {
        "species": record.id,
        "method": result.method,
        "estimate": result.estimate,
        "ci_low": result.ci_low,
        "ci_high": result.ci_high,
        "diagnostics": result.diagnostics,
        "points": rows,
        "inputs": {"result": str(result_file.relative_to(out))},
        "seed": seed_root,
    }
    path = out / f"{record.id}.extrapolate.{args.method}.json"
    path.write_text(canonical_json(report))
    return [f"wrote {path}", f"{record.id}: {result.method} estimate {result.estimate:.8f}"]


def cmd_diagnostics(manifest: Manifest, record: SpeciesRecord, args) -> list[str]:
    out = Path(args.out)
    sample_file = _sample_path(out, record.id)
    if not sample_file.is_file():
        raise FileNotFoundError(
            f"no sample file {sample_file}; run `sqdforge sample` for species "
            f"{record.id!r} first"
        )
    samples = read_samples(sample_file.read_text())
    diag = sample_diagnostics(samples, record.n_alpha, record.n_beta, record.m)
    resources = estimate_resources(record.m)
    payload = {
        "species": record.id,
        "p_hw": diag.p_hw,
        "p_unif": diag.p_unif,
        "f_sz": diag.f_sz,
        "resources": {
            "n_qubits": resources.n_qubits,
            "n_ancillas": resources.n_ancillas,
            "two_qubit_count": resources.two_qubit_count,
            "two_qubit_depth": resources.two_qubit_depth,
        },
    }
    path = out / f"{record.id}.diagnostics.json"
    path.write_text(canonical_json(payload))
    return [
        f"wrote {path}",
        f"{record.id}: p_hw={diag.p_hw:.6f} p_unif={diag.p_unif:.6g} f_sz={diag.f_sz:+.6f}",
    ]


def _collect_energies(manifest: Manifest, out: Path) -> dict[str, dict[str, float]]:
    """Reference energies plus whatever computed columns exist on disk."""
    energies: dict[str, dict[str, float]] = {}
    for record in manifest.species:
        cell = dict(record.reference_energies)
        result_file = _result_path(out, record.id)
        if result_file.is_file():
            cell["sqd"] = float(json.loads(result_file.read_text())["energy"])
        for method in EXTRAPOLATION_METHODS:
            report_file = out / f"{record.id}.extrapolate.{method}.json"
            if report_file.is_file():
                cell[f"sqd_{method}"] = float(json.loads(report_file.read_text())["estimate"])
        if cell:
            energies[record.id] = cell
    return energies


def cmd_report(manifest: Manifest, args) -> list[str]:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    energies = _collect_energies(manifest, out)
    errors = energy_errors(energies, args.reference)

    lines = ["species,method,signed_error,absolute_error"]
    for species in sorted(errors):
        for method in sorted(errors[species]):
            err = errors[species][method]
            lines.append(f"{species},{method},{err.signed:.17g},{err.absolute:.17g}")
    energy_csv = out / "report.energy_errors.csv"
    energy_csv.write_text("\n".join(lines) + "\n")
    messages = [f"wrote {energy_csv}"]

    report = {
        "reference": args.reference,
        "energy_errors": {
            s: {m: {"signed": e.signed, "absolute": e.absolute} for m, e in row.items()}
            for s, row in errors.items()
        },
    }

    if manifest.reactions is not None:
        table = read_reactions(manifest.reactions.read_text())
        per_reaction, class_means = reaction_energy_errors(table, energies, args.reference)
        classes = {r.id: r.reaction_class for r in table}
        lines = ["reaction,class,method,signed_error"]
        for rid in sorted(per_reaction):
            for method in sorted(per_reaction[rid]):
                lines.append(f"{rid},{classes[rid]},{method},{per_reaction[rid][method]:.17g}")
        reaction_csv = out / "report.reaction_errors.csv"
        reaction_csv.write_text("\n".join(lines) + "\n")
        messages.append(f"wrote {reaction_csv}")

        lines = ["class,method,mean_absolute_error"]
        for cls in sorted(class_means):
            for method in sorted(class_means[cls]):
                lines.append(f"{cls},{method},{class_means[cls][method]:.17g}")
        means_csv = out / "report.class_means.csv"
        means_csv.write_text("\n".join(lines) + "\n")
        messages.append(f"wrote {means_csv}")

        profiles: dict[str, dict[str, dict]] = {}
        for cls in sorted(class_means):
            rows = [rid for rid in per_reaction if classes[rid] == cls]
            profiles[cls] = {}
            for method in sorted(class_means[cls]):
                profile = stat_profile([per_reaction[rid][method] for rid in rows])
                profiles[cls][method] = {
                    "median": profile.median,
                    "q1": profile.q1,
                    "q3": profile.q3,
                    "iqr": profile.iqr,
                    "max_w": profile.max_w,
                    "min_w": profile.min_w,
                    "outliers": list(profile.outliers),
                }
        report["reaction_errors"] = per_reaction
        report["class_means"] = class_means
        report["profiles"] = profiles

    report_json = out / "report.json"
    report_json.write_text(canonical_json(report))
    messages.append(f"wrote {report_json}")
    return messages


def _species_ids(manifest: Manifest, args) -> list[str]:
    if args.species is None:
        return [record.id for record in manifest.species]
    return [manifest.record(args.species).id]


def _run_per_species(manifest: Manifest, args, fn) -> int:
    ids = _species_ids(manifest, args)
    jobs = args.jobs if args.jobs is not None else int(os.environ.get("SQDFORGE_JOBS", "1"))
    records = [manifest.record(i) for i in ids]
    if jobs <= 1:
        outputs = [fn(manifest, record, args) for record in records]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(lambda r: fn(manifest, r, args), records))
    for messages in outputs:
        for message in messages:
            print(message)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("manifest", help="manifest JSON file")
    parser.add_argument("--species", help="restrict to one species id (default: all)")
    parser.add_argument("--out", default=".", help="working directory (default: .)")
    parser.add_argument("--seed", type=int, help="override the manifest seed")
    parser.add_argument("--jobs", type=int, help="parallel species (default: $SQDFORGE_JOBS or 1)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqdforge",
        description="Sample-based quantum diagonalization pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="simulate the ansatz and draw bitstrings")
    _add_common(p)
    p.add_argument("--shots", type=int, help="shot count (default: manifest)")
    p.add_argument("--p-flip", type=float, dest="p_flip", help="per-bit flip probability")
    p.add_argument("--p-depol", type=float, dest="p_depol", help="depolarizing probability")

    p = sub.add_parser("solve", help="recover configurations and diagonalize")
    _add_common(p)
    p.add_argument("--zeta", type=float, action="append", help="subspace fraction (repeatable)")
    p.add_argument("--batches", type=int, help="batches per iteration (default: manifest)")
    p.add_argument("--max-iter", type=int, dest="max_iter", help="recovery iterations")

    p = sub.add_parser("extrapolate", help="fit energy-variance points to V=0")
    _add_common(p)
    p.add_argument("--method", choices=EXTRAPOLATION_METHODS, default="gev")
    p.add_argument("--clusters", type=int, default=1, help="line count for lmm")
    p.add_argument("--epsilon", type=float, default=1e-5, help="overlap truncation for gev")

    p = sub.add_parser("report", help="error tables against a reference method")
    p.add_argument("manifest", help="manifest JSON file")
    p.add_argument("--out", default=".", help="working directory (default: .)")
    p.add_argument("--reference", required=True, help="reference method column")

    p = sub.add_parser("diagnostics", help="sample quality and resource estimates")
    _add_common(p)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        manifest = load_manifest(args.manifest)
        if args.command == "sample":
            return _run_per_species(manifest, args, cmd_sample)
        if args.command == "solve":
            return _run_per_species(manifest, args, cmd_solve)
        if args.command == "extrapolate":
            return _run_per_species(manifest, args, cmd_extrapolate)
        if args.command == "diagnostics":
            return _run_per_species(manifest, args, cmd_diagnostics)
        for message in cmd_report(manifest, args):
            print(message)
        return 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, RecoveryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SqdforgeError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
