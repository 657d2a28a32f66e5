"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 I/O or file-format error,
4 TIP quality score below ``--min-score``.  Output files are written to a
temporary name and renamed into place, so failures never leave partial
files.  ``VOLTIP_THREADS`` caps worker threads for the swarm optimiser;
results are identical for any thread count.
"""

from __future__ import annotations

import argparse
import io as _io
import json
import math
import os
import sys

import numpy as np

from . import io as vio
from .artefacts import generate_artefacts
from .errors import ValidationError, VolumeFormatError
from .insertion import Pose, insert, quality_score
from .isolation import ThreatIndicator, isolate_threat
from .phantoms import KINDS, PhantomSpec, generate
from .pipeline import PipelineConfig, load_config_file, run_pipeline
from .voids import BagCostMap, determine_voids
from .volume import Volume

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_REJECTED = 4


def _workers_from_env() -> int:
    try:
        return max(1, int(os.environ.get("VOLTIP_THREADS", "1")))
    except ValueError:
        return 1


def _atomic_write_bytes(path: str, payload: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, payload: dict) -> None:
    _atomic_write_bytes(path, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode())


def _write_png(path: str, img: np.ndarray) -> None:
    from PIL import Image

    buf = _io.BytesIO()
    Image.fromarray(img, mode="L").save(buf, format="PNG")
    _atomic_write_bytes(path, buf.getvalue())


def _to_u8(slice2d: np.ndarray, max_intensity: int) -> np.ndarray:
    scaled = np.clip(slice2d.astype(np.float64), 0, max_intensity) / max_intensity
    return np.rint(scaled * 255).astype(np.uint8)


def _config_from_args(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        cfg = load_config_file(args.config, cfg)
    overrides = {}
    for f in ("threat_binarize_threshold", "body_dilate_radius", "background_dilate_radius",
              "connectivity", "bag_binarize_threshold", "bag_dilate_radius",
              "content_threshold", "c", "lambda1", "lambda2", "c_prime", "gravity_axis",
              "w", "c1", "c2", "n_particles", "n_iterations", "seed",
              "metal_threshold", "q", "n_angles", "recon_filter", "slice_axis"):
        v = getattr(args, f, None)
        if v is not None:
            overrides[f] = v
    if getattr(args, "no_mag", False):
        overrides["apply_mag"] = False
    cfg = cfg.merged(overrides)
    return cfg.merged({"workers": _workers_from_env()})


def _add_config_flags(p: argparse.ArgumentParser, groups=("isolate", "bag", "insert", "mag")):
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--seed", type=int, help="global random seed")
    if "isolate" in groups:
        p.add_argument("--threat-binarize-threshold", type=float, dest="threat_binarize_threshold")
        p.add_argument("--body-dilate-radius", type=int, dest="body_dilate_radius")
        p.add_argument("--background-dilate-radius", type=int, dest="background_dilate_radius")
        p.add_argument("--connectivity", type=int, choices=(6, 26))
    if "bag" in groups:
        p.add_argument("--bag-binarize-threshold", type=float, dest="bag_binarize_threshold",
                       help="bag envelope threshold; prefer a generous value, since noise "
                            "absorbed into the bag can open fake voids outside it")
        p.add_argument("--bag-dilate-radius", type=int, dest="bag_dilate_radius")
        p.add_argument("--content-threshold", type=float, dest="content_threshold")
        p.add_argument("--c", type=float, help="outer-bag projection cost constant")
    if "insert" in groups:
        p.add_argument("--lambda1", type=float)
        p.add_argument("--lambda2", type=float)
        p.add_argument("--c-prime", type=float, dest="c_prime")
        p.add_argument("--gravity-axis", choices=("x", "y", "z"), dest="gravity_axis")
        p.add_argument("--pso-w", type=float, dest="w")
        p.add_argument("--pso-c1", type=float, dest="c1")
        p.add_argument("--pso-c2", type=float, dest="c2")
        p.add_argument("--n-particles", type=int, dest="n_particles")
        p.add_argument("--n-iterations", type=int, dest="n_iterations")
    if "mag" in groups:
        p.add_argument("--metal-threshold", type=float, dest="metal_threshold")
        p.add_argument("--q", type=float, help="sinogram corruption strength in [0, 1]")
        p.add_argument("--n-angles", type=int, dest="n_angles")
        p.add_argument("--recon-filter", choices=("ram-lak", "shepp-logan"), dest="recon_filter")
        p.add_argument("--slice-axis", choices=("x", "y", "z"), dest="slice_axis")


def _save_indicator(ind: ThreatIndicator, path: str) -> None:
    vio.save_array(ind.w, path, ind.spacing, vio.DTYPE_F32, max_value=1)


def _load_indicator(path: str) -> ThreatIndicator:
    data, spacing, _, code = vio.load_array(path)
    if code != vio.DTYPE_F32:
        raise VolumeFormatError(f"{path}: indicator must be an f32 volume")
    return ThreatIndicator(np.clip(data.astype(np.float64), 0.0, 1.0), spacing)


def _load_cost_map(cost_path: str, regions_path: str, c: float) -> BagCostMap:
    cost, spacing, _, code = vio.load_array(cost_path)
    if code != vio.DTYPE_F32:
        raise VolumeFormatError(f"{cost_path}: cost map must be an f32 volume")
    region, _, _, rcode = vio.load_array(regions_path)
    if rcode != vio.DTYPE_U8:
        raise VolumeFormatError(f"{regions_path}: region tags must be a u8 volume")
    if region.shape != cost.shape:
        raise VolumeFormatError("cost map and region tag grids disagree")
    return BagCostMap(cost.astype(np.float64), region, c, spacing)


def _insertion_meta(result, cfg: PipelineConfig, indicator_dims) -> dict:
    from .volume import rotated_dims

    ox, oy, oz = result.pose.origin
    ex, ey, ez = rotated_dims(indicator_dims, result.pose.angles)
    return {
        "pose": {"x": result.pose.x, "y": result.pose.y, "z": result.pose.z,
                 "alpha": result.pose.alpha, "beta": result.pose.beta,
                 "gamma": result.pose.gamma},
        "crop_origin": [ox, oy, oz],
        "centroid": [ox + ex // 2, oy + ey // 2, oz + ez // 2],
        "cost": result.cost,
        "score": result.score,
        "threat_voxels": result.threat_voxels,
        "seed": cfg.seed,
    }


def _write_trace(path: str, trace) -> None:
    lines = ["iteration,best_cost"]
    lines += [f"{i},{c!r}" for i, c in enumerate(trace)]
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


# ---------------------------------------------------------------- commands


def _cmd_phantom(args) -> int:
    spec = PhantomSpec(args.kind, tuple(args.dims), args.seed or 0,
                       args.clutter_density, args.noise_sigma)
    volume, truth = generate(spec)
    vio.save_volume(volume, args.out)
    if args.out_truth:
        vio.save_array(truth.region, args.out_truth, volume.spacing,
                       vio.DTYPE_U8, max_value=3)
    print(f"phantom {args.kind} {volume.dims} -> {args.out}")
    return EXIT_OK


def _cmd_import_raw(args) -> int:
    volume = vio.load_raw_u16(args.input, tuple(args.dims), tuple(args.spacing),
                              args.max_intensity)
    vio.save_volume(volume, args.out)
    print(f"imported {volume.dims} raw voxels -> {args.out}")
    return EXIT_OK


def _cmd_isolate(args) -> int:
    cfg = _config_from_args(args)
    scan = vio.load_volume(args.input)
    threat, indicator = isolate_threat(scan, cfg.isolation_params())
    vio.save_volume(threat, args.out_threat)
    _save_indicator(indicator, args.out_indicator)
    kept = int(np.count_nonzero(indicator.w))
    print(f"threat {threat.dims}, {kept} weighted voxels -> {args.out_threat}")
    return EXIT_OK


def _cmd_segment_bag(args) -> int:
    cfg = _config_from_args(args)
    bag = vio.load_volume(args.input)
    cmap = determine_voids(bag, cfg.void_params())
    vio.save_array(cmap.cost, args.out_cost, cmap.spacing, vio.DTYPE_F32,
                   max_value=int(round(cmap.c)))
    vio.save_array(cmap.region, args.out_regions, cmap.spacing, vio.DTYPE_U8, max_value=3)
    print(f"bag {bag.dims}: void {int((cmap.region == 1).sum())} voxels "
          f"-> {args.out_cost}")
    return EXIT_OK


def _cmd_insert(args) -> int:
    cfg = _config_from_args(args)
    threat = vio.load_volume(args.threat)
    indicator = _load_indicator(args.indicator)
    bag = vio.load_volume(args.bag)
    cmap = _load_cost_map(args.cost, args.regions, cfg.c)
    result = insert(threat, indicator, bag, cmap, cfg.objective_params(),
                    cfg.pso_config(), workers=cfg.workers)
    vio.save_volume(result.volume, args.out)
    if args.meta:
        _write_json(args.meta, _insertion_meta(result, cfg, indicator.dims))
    if args.trace:
        _write_trace(args.trace, result.trace)
    print(f"insert cost {result.cost:.3f} score {result.score:.1f} -> {args.out}")
    return EXIT_OK


def _cmd_mag(args) -> int:
    cfg = _config_from_args(args)
    bag = vio.load_volume(args.bag)
    threat = vio.load_volume(args.threat)
    indicator = _load_indicator(args.indicator)
    pose = _pose_from_args(args)
    tip = generate_artefacts(bag, threat, indicator, pose, cfg.mag_params())
    vio.save_volume(tip, args.out)
    print(f"mag q={cfg.q} -> {args.out}")
    return EXIT_OK


def _pose_from_args(args) -> Pose:
    if args.meta:
        with open(args.meta, "r", encoding="utf-8") as f:
            meta = json.load(f)
        p = meta["pose"]
        return Pose(p["x"], p["y"], p["z"], p["alpha"], p["beta"], p["gamma"])
    if args.pose is None:
        raise ValidationError("either --pose or --meta is required")
    return Pose(*args.pose)


def _cmd_score(args) -> int:
    s = quality_score(args.cost, args.threat_voxels, args.c if args.c is not None else 100.0)
    print(f"{s:g}")
    return EXIT_OK


def _cmd_slices(args) -> int:
    volume = vio.load_volume(args.input)
    nx, ny, nz = volume.dims
    at = None
    if args.meta:
        with open(args.meta, "r", encoding="utf-8") as f:
            meta = json.load(f)
        centroid = meta.get("centroid")
        if centroid:
            at = tuple(int(c) for c in centroid)
    if args.at:
        at = tuple(args.at)
    if at is None:
        at = (nx // 2, ny // 2, nz // 2)
    i, j, k = (min(max(v, 0), d - 1) for v, d in zip(at, volume.dims))
    views = {
        "axial": volume.data[:, :, k].T,      # rows: y, cols: x
        "coronal": volume.data[:, j, :].T,    # rows: z, cols: x
        "sagittal": volume.data[i, :, :].T,   # rows: z, cols: y
    }
    for name, img in views.items():
        path = f"{args.out_prefix}_{name}.png"
        _write_png(path, _to_u8(img, volume.max_intensity))
        print(path)
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    cfg = _config_from_args(args)
    threat_scan = vio.load_volume(args.threat_scan)
    bag_scan = vio.load_volume(args.bag_scan)
    result = run_pipeline(threat_scan, bag_scan, cfg)
    vio.save_volume(result.tip, args.out)

    ins = result.insertion
    meta = _insertion_meta(ins, cfg, result.indicator.dims)
    meta["mag"] = cfg.apply_mag
    if args.meta:
        _write_json(args.meta, meta)
    if args.trace:
        _write_trace(args.trace, ins.trace)
    print(f"pipeline score {ins.score:.1f} cost {ins.cost:.3f} -> {args.out}")
    if args.min_score is not None and ins.score < args.min_score:
        print(f"rejected: score {ins.score:.1f} < {args.min_score}", file=sys.stderr)
        return EXIT_REJECTED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="voltip",
        description="Threat image projection for 3D baggage CT volumes.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a synthetic phantom volume")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--dims", type=int, nargs=3, default=(32, 32, 32))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clutter-density", type=float, default=0.5, dest="clutter_density")
    p.add_argument("--noise-sigma", type=float, default=20.0, dest="noise_sigma")
    p.add_argument("--out", required=True)
    p.add_argument("--out-truth", dest="out_truth")
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("import-raw", help="wrap a headerless u16-LE payload as VTIP")
    p.add_argument("--input", required=True)
    p.add_argument("--dims", type=int, nargs=3, required=True)
    p.add_argument("--spacing", type=float, nargs=3, default=(1.0, 1.0, 1.0))
    p.add_argument("--max-intensity", type=int, default=4095, dest="max_intensity")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_import_raw)

    p = sub.add_parser("isolate", help="segment a threat scan and crop it")
    p.add_argument("--input", required=True)
    p.add_argument("--out-threat", required=True, dest="out_threat")
    p.add_argument("--out-indicator", required=True, dest="out_indicator")
    _add_config_flags(p, ("isolate",))
    p.set_defaults(func=_cmd_isolate)

    p = sub.add_parser("segment-bag", help="segment a bag into outer/void/content costs")
    p.add_argument("--input", required=True)
    p.add_argument("--out-cost", required=True, dest="out_cost")
    p.add_argument("--out-regions", required=True, dest="out_regions")
    _add_config_flags(p, ("bag",))
    p.set_defaults(func=_cmd_segment_bag)

    p = sub.add_parser("insert", help="optimise and blend a threat into a bag")
    p.add_argument("--threat", required=True)
    p.add_argument("--indicator", required=True)
    p.add_argument("--bag", required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--regions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--meta")
    p.add_argument("--trace")
    _add_config_flags(p, ("bag", "insert"))
    p.set_defaults(func=_cmd_insert)

    p = sub.add_parser("mag", help="synthesise metal artefacts for a placed threat")
    p.add_argument("--bag", required=True)
    p.add_argument("--threat", required=True)
    p.add_argument("--indicator", required=True)
    p.add_argument("--pose", type=float, nargs=6, metavar=("X", "Y", "Z", "A", "B", "G"))
    p.add_argument("--meta", help="insertion metadata JSON with the pose")
    p.add_argument("--out", required=True)
    _add_config_flags(p, ("mag",))
    p.set_defaults(func=_cmd_mag)

    p = sub.add_parser("score", help="TIP quality score from cost and threat size")
    p.add_argument("--cost", type=float, required=True)
    p.add_argument("--threat-voxels", type=int, required=True, dest="threat_voxels")
    p.add_argument("--c", type=float)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("slices", help="export axial/coronal/sagittal PNG views")
    p.add_argument("--input", required=True)
    p.add_argument("--out-prefix", required=True, dest="out_prefix")
    p.add_argument("--at", type=int, nargs=3, help="voxel index of the view centre")
    p.add_argument("--meta", help="use the threat centroid from insertion metadata")
    p.set_defaults(func=_cmd_slices)

    p = sub.add_parser("pipeline", help="threat scan + bag scan -> scored TIP volume")
    p.add_argument("--threat-scan", required=True, dest="threat_scan")
    p.add_argument("--bag-scan", required=True, dest="bag_scan")
    p.add_argument("--out", required=True)
    p.add_argument("--meta")
    p.add_argument("--trace")
    p.add_argument("--min-score", type=float, dest="min_score",
                   help="exit 4 when the TIP quality score falls below this")
    p.add_argument("--no-mag", action="store_true", dest="no_mag")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_pipeline)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (VolumeFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
