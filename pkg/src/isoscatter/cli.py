"""Command line pipelines.

Exit codes: 0 success, 1 a checked property failed, 2 bad configuration,
3 contour integration trouble.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import groups, homology, schottky, transplant, zeta

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONTOUR = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class CheckFailed(Exception):
    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = report


# --- config and output -----------------------------------------------------------

def resolve_refs(obj, base: Path, seen: tuple[Path, ...] = ()):
    """Replace every {"$ref": "file.json"} by the parsed file (relative to the including file)."""
    if isinstance(obj, dict):
        if set(obj) == {"$ref"}:
            path = (base / obj["$ref"]).resolve()
            if path in seen:
                raise ConfigError(f"circular $ref through {path}")
            return resolve_refs(_read_json(path), path.parent, seen + (path,))
        return {k: resolve_refs(v, base, seen) for k, v in obj.items()}
    if isinstance(obj, list):
        return [resolve_refs(v, base, seen) for v in obj]
    return obj


def _read_json(path: Path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"missing file {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(path) -> dict:
    path = Path(path).resolve()
    cfg = resolve_refs(_read_json(path), path.parent, (path,))
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj, indent: int = 2) -> str:
    """JSON with sorted keys and every float written to 17 significant digits."""

    def enc(x, depth):
        pad, inner = " " * (indent * depth), " " * (indent * (depth + 1))
        if isinstance(x, dict):
            if not x:
                return "{}"
            items = [f"{inner}{json.dumps(k)}: {enc(x[k], depth + 1)}" for k in sorted(x)]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(x, list):
            if not x:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in x):
                return "[" + ", ".join(enc(v, depth + 1) for v in x) + "]"
            return "[\n" + ",\n".join(inner + enc(v, depth + 1) for v in x) + "\n" + pad + "]"
        if isinstance(x, bool) or x is None:
            return json.dumps(x)
        if isinstance(x, float):
            if not math.isfinite(x):
                return json.dumps(str(x))
            return f"{x:.17g}"
        return json.dumps(x)

    return enc(_plain(obj), 0) + "\n"


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


# --- shared builders ------------------------------------------------------------

def _group_and_subgroups(cfg: dict):
    try:
        G = groups.group_from_spec(cfg["group"])
        H1 = groups.subgroup_from_spec(G, cfg["H1"])
        H2 = groups.subgroup_from_spec(G, cfg["H2"])
    except KeyError as exc:
        raise ConfigError(f"missing key {exc}") from exc
    return G, H1, H2


def _extension(G, cfg: dict):
    ext = cfg.get("extension")
    if not ext:
        return None
    sigma = G.inverse_transpose() if ext.get("auto", "inverse-transpose") == "inverse-transpose" else None
    if sigma is None:
        sigma = np.arange(G.order)
    return groups.semidirect_extension(G, sigma)


def _schottky(cfg: dict) -> schottky.SchottkyData:
    spec = cfg.get("schottky")
    if spec is None:
        raise ConfigError("missing key 'schottky'")
    if isinstance(spec, str):
        examples = {"rank2": schottky.example_rank2, "rank1": schottky.example_rank1}
        if spec not in examples:
            raise ConfigError(f"unknown example {spec!r}")
        return examples[spec]()
    return schottky.SchottkyData.from_json(spec)


def _rect(value) -> zeta.Rect:
    if isinstance(value, dict):
        return zeta.Rect(value["re_min"], value["re_max"], value["im_min"], value["im_max"])
    return zeta.Rect(*map(float, value))


def _hom(G, cfg: dict, rank: int):
    if "images" in cfg:
        imgs = [groups.element_from_spec(G, e) for e in cfg["images"]]
    else:
        imgs = list(groups.find_generating_tuple(G, rank))
    if len(imgs) != rank:
        raise ConfigError(f"need {rank} images, got {len(imgs)}")
    return groups.hom_from_free(G, imgs)


# --- commands --------------------------------------------------------------------

def cmd_sunada(cfg: dict, args) -> dict:
    G, H1, H2 = _group_and_subgroups(cfg)
    triple = groups.sunada_check(G, H1, H2)
    report = {"triple": triple.to_json()}
    failures = []
    if not triple.sunada_ok:
        failures.append("class intersection counts differ")
    if triple.sunada_ok != triple.perm_char_ok:
        failures.append("class counts and permutation characters disagree")
    if triple.sunada_ok and not triple.cycle_types_ok:
        failures.append("cycle types differ")
    if triple.conjugator is not None:
        report["triple"]["conjugator"] = groups.element_to_spec(G, triple.conjugator)

    Gp = _extension(G, cfg)
    if Gp is not None:
        w = groups.find_conjugator(Gp, H1.in_parent(Gp), H2.in_parent(Gp))
        report["extension"] = {
            "order": Gp.order,
            "conj_in_extension": w is not None,
            "conjugator": None if w is None else groups.element_to_spec(Gp, w),
        }

    if triple.sunada_ok:
        S = [groups.element_from_spec(G, e) for e in cfg["generators"]] if "generators" in cfg else \
            list(groups.find_generating_tuple(G))
        try:
            tr = transplant.verify_isoscattering_discrete(G, H1, H2, S)
            report["transplant"] = tr.to_json()
            if not tr.ok:
                failures.append(f"transplantation check failed: {tr.witness}")
        except transplant.NoInvertibleIntertwiner as exc:
            failures.append(str(exc))

    for key, want in cfg.get("expect", {}).items():
        got = {"sunada_ok": triple.sunada_ok, "conj_in_G": triple.conj_in_G,
               "conj_in_extension": report.get("extension", {}).get("conj_in_extension")}.get(key)
        if got != want:
            failures.append(f"expected {key} = {want}, got {got}")
    report["ok"] = not failures
    report["failures"] = failures
    _write(args.out, "sunada_report.json", dumps(report))
    if failures:
        raise CheckFailed("; ".join(failures), report)
    return report


def cmd_isoscatter(cfg: dict, args) -> dict:
    data = _schottky(cfg)
    schottky.validate(data, tol=args.tol or cfg.get("tol", schottky.DEFAULT_TOL))
    G, H1, H2 = _group_and_subgroups(cfg)
    if H1.order != H2.order:
        raise groups.OrderMismatch(H1.order, H2.order)
    hom = _hom(G, cfg, data.g)
    n_max = args.n_max or cfg.get("n_max", 8)
    k_max = args.k_max or cfg.get("k_max", 12)
    threads = args.threads or cfg.get("threads", 1)
    trunc = zeta.ZetaTruncation(n_max=n_max, k_max=k_max)

    base = zeta.length_spectrum(data, n_max, threads)
    lifts = [zeta.lift_spectrum(base, hom, H) for H in (H1, H2)]
    fault = cfg.get("fault_injection", {})
    if "corrupt_weight" in fault:
        i = int(fault["corrupt_weight"]) % len(lifts[1])
        e = lifts[1][i]
        lifts[1][i] = zeta.SpectrumEntry(e.ell, e.theta, e.weight + 1, e.word, e.period)
    _write(args.out, "spectrum_H1.csv", zeta.spectrum_to_csv(lifts[0]))
    _write(args.out, "spectrum_H2.csv", zeta.spectrum_to_csv(lifts[1]))

    report = {
        "images": [groups.element_to_spec(G, x) for x in hom.images],
        "n_max": n_max,
        "k_max": k_max,
        "base_classes": len(base),
        "lifted_entries": [len(x) for x in lifts],
    }
    bad = zeta.spectrum_discrepancy(lifts[0], lifts[1], tol=1e-12)
    if bad is not None:
        side, idx, e = bad
        report["discrepancy"] = {"spectrum": "H1" if side == "left" else "H2", "index": idx,
                                 "ell": e.ell, "theta": e.theta, "weight": e.weight, "word": e.word_str}
        _write(args.out, "isoscatter_report.json", dumps(report))
        raise CheckFailed(f"spectra differ at {report['discrepancy']}", report)

    pts = zeta.sample_points(int(cfg.get("samples", 20)))
    gaps = [abs(zeta.zeta_eval(lifts[0], s, trunc) - zeta.zeta_eval(lifts[1], s, trunc)) for s in pts]
    report["zeta_max_gap"] = max(gaps)

    scan = cfg.get("scan", {})
    scan_n = int(scan.get("n_max", 1))
    rect = _rect(scan.get("rect", [-0.5, 0.5, 0.05, 2.05]))
    res = float(scan.get("resolution", 1e-4))
    small = [e for e in base if len(e.word) <= scan_n]
    zero_lists = []
    for name, H in (("H1", H1), ("H2", H2)):
        sp = zeta.lift_spectrum(small, hom, H)
        zs = zeta.scan_zeros(sp, rect, trunc, res)
        text = zeta.zeros_to_csv(zs)
        _write(args.out, f"zeros_{name}.csv", text)
        zero_lists.append(text)
    report["zeros_identical"] = zero_lists[0] == zero_lists[1]
    report["zero_count"] = zero_lists[0].count("\n") - 1
    _write(args.out, "isoscatter_report.json", dumps(report))
    if report["zeta_max_gap"] > 1e-12:
        raise CheckFailed(f"zeta values differ by {report['zeta_max_gap']}", report)
    if not report["zeros_identical"]:
        raise CheckFailed("zero lists differ", report)
    return report


def _spectrum_from_config(cfg: dict, args, base_dir: Path | None = None) -> list[zeta.SpectrumEntry]:
    if "entries" in cfg:
        return zeta.sort_spectrum(
            zeta.SpectrumEntry(float(e["ell"]), float(e["theta"]), int(e.get("weight", 1))) for e in cfg["entries"]
        )
    if "spectrum_csv" in cfg:
        path = Path(cfg["spectrum_csv"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            return zeta.spectrum_from_csv(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"missing file {path}") from exc
    data = _schottky(cfg)
    schottky.validate(data)
    return zeta.length_spectrum(data, args.n_max or cfg.get("n_max", 1), args.threads or 1)


def cmd_zeta_scan(cfg: dict, args) -> dict:
    spec = _spectrum_from_config(cfg, args, getattr(args, "config_dir", None))
    trunc = zeta.ZetaTruncation(n_max=args.n_max or cfg.get("n_max", 8), k_max=args.k_max or cfg.get("k_max", 12))
    try:
        rect = _rect(cfg["rect"])
    except KeyError as exc:
        raise ConfigError("missing key 'rect'") from exc
    zs = zeta.scan_zeros(spec, rect, trunc, float(cfg.get("resolution", 1e-6)))
    text = zeta.zeros_to_csv(zs)
    _write(args.out, "zeros.csv", text)
    if args.out is None:
        sys.stdout.write(text)
    return {"zeros": len(zs), "multiplicity": sum(z.multiplicity for z in zs)}


def cmd_schottky_validate(cfg: dict, args) -> dict:
    data = schottky.SchottkyData.from_json(cfg["schottky"] if "schottky" in cfg else cfg)
    rep = schottky.validate(data, tol=args.tol or cfg.get("tol", schottky.DEFAULT_TOL), strict=False)
    report = rep.to_json()
    if rep.ok and "depth" in cfg:
        depth = int(cfg["depth"])
        sample = schottky.limit_set_sample(data, depth)
        report["limit_set_area"] = [sample.area(d) for d in range(1, depth + 1)]
        if depth >= 2 and data.g >= 2:
            report["delta_estimate"] = schottky.delta_estimate(data, depth)
    _write(args.out, "schottky_report.json", dumps(report))
    if not rep.ok:
        raise CheckFailed("; ".join(rep.failures), report)
    return report


def cmd_curves_check(cfg: dict, args) -> dict:
    if "default_fixture" in cfg:
        fx = cfg["default_fixture"]
        cfg = homology.default_curve_config(int(fx.get("k", 2)), int(fx.get("p", 2)))
    try:
        curve_cfg = homology.CurveConfig.from_json(cfg)
    except KeyError as exc:
        raise ConfigError(f"missing key {exc}") from exc
    rep = homology.verify_sunada_curve_config(curve_cfg)
    report = rep.to_json()
    report["cover_genus"] = homology.cover_genus(2, 3)
    _write(args.out, "curves_report.json", dumps(report))
    if not rep.ok:
        raise CheckFailed("; ".join(rep.failures), report)
    return report


COMMANDS = {
    "sunada": cmd_sunada,
    "isoscatter": cmd_isoscatter,
    "zeta-scan": cmd_zeta_scan,
    "schottky-validate": cmd_schottky_validate,
    "curves-check": cmd_curves_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isoscatter", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=None)
        sp.add_argument("--n-max", type=int, default=None)
        sp.add_argument("--k-max", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--threads", type=int, default=None)
    return p


CONFIG_ERRORS = (ConfigError, KeyError, TypeError, groups.GroupError, schottky.SchottkyError,
                 homology.HomologyError, transplant.NotGenerating, ValueError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        args.config_dir = args.config.resolve().parent
        report = COMMANDS[args.command](cfg, args)
    except CheckFailed as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (zeta.ZeroOnContour,) as exc:
        hint = ""
        if exc.suggestion is not None:
            r = exc.suggestion
            hint = f"; try rect [{r.re_min:.17g}, {r.re_max:.17g}, {r.im_min:.17g}, {r.im_max:.17g}]"
        print(f"contour error: {exc}{hint}", file=sys.stderr)
        return EXIT_CONTOUR
    except zeta.QuadratureDiverged as exc:
        print(f"contour error: {exc}", file=sys.stderr)
        return EXIT_CONTOUR
    except CONFIG_ERRORS as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command != "zeta-scan" or args.out is not None:
        sys.stdout.write(dumps(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
