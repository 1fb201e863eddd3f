"""Directory layout of a serialized triplet bundle.

A bundle directory holds one file per grid and a ``bundle.txt`` manifest in
the ``key = value`` config format. Floats in the manifest are written with
``repr`` so that reading them back is exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from vifidepth.fusion.interpolation import FlowField, MergeMask
from vifidepth.geometry.camera import Intrinsics, PoseSE3
from vifidepth.geometry.imgrid import ImageGrid, ValidityMask
from vifidepth.libs.core.formats import FormatError, read_flo, read_pfm, read_ppm, write_flo, write_pfm, write_ppm
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory
from vifidepth.libs.core.parsing.config import ConfigLoader, ConfigLoaderError
from vifidepth.scene.bundle import INTERMEDIATES, TripletBundle
from vifidepth.scene.trajectory import POSITIONS, Trajectory

logger = VifiDepthLoggerFactory.get_logger(__name__)

MANIFEST = "bundle.txt"


def position_tag(position: int) -> str:
    """``-2 -> m2``, ``0 -> t``, ``1 -> p1``."""
    if position == 0:
        return "t"
    return f"{'m' if position < 0 else 'p'}{abs(position)}"


def _floats(values: np.ndarray | list[float] | tuple[float, ...]) -> str:
    return ",".join(repr(float(v)) for v in np.ravel(values))


def _parse_floats(text: str, count: int, key: str) -> np.ndarray:
    try:
        values = np.array([float(part) for part in text.split(",")])
    except ValueError as e:
        raise FormatError(f"Manifest entry {key} is not a float list: {text!r}") from e
    if values.size != count:
        raise FormatError(f"Manifest entry {key} needs {count} values, got {values.size}")
    return values


def write_bundle(bundle: TripletBundle, out_dir: Path) -> Path:
    """Write every grid of ``bundle`` and its manifest; returns the manifest path."""
    out_dir.mkdir(parents=True, exist_ok=True)
    K = bundle.K
    lines = [
        "# vifidepth triplet bundle",
        f"shape = {bundle.shape[0]},{bundle.shape[1]}",
        f"K = {_floats((K.fx, K.fy, K.cx, K.cy))}",
        f"temporal = {bundle.temporal}",
        f"positions = {','.join(str(k) for k in POSITIONS)}",
    ]
    for k in POSITIONS:
        tag = position_tag(k)
        write_ppm(out_dir / f"frame_{tag}.ppm", bundle.images[k].data)
        write_pfm(out_dir / f"depth_{tag}.pfm", bundle.depths[k].data)
        pose = bundle.trajectory.pose(k)
        lines += [
            f"frame.{tag} = frame_{tag}.ppm",
            f"depth.{tag} = depth_{tag}.pfm",
            f"pose.{tag} = {_floats(np.concatenate([pose.rotation.ravel(), pose.translation]))}",
        ]
    for middle, neighbours in INTERMEDIATES.items():
        mid = position_tag(middle)
        for other in neighbours:
            pair = f"{mid}_{position_tag(other)}"
            write_flo(out_dir / f"flow_{pair}.flo", bundle.flows[(middle, other)].data)
            write_pfm(out_dir / f"occlusion_{pair}.pfm", bundle.occlusions[(middle, other)].values)
            lines += [f"flow.{pair} = flow_{pair}.flo", f"occlusion.{pair} = occlusion_{pair}.pfm"]
        write_pfm(out_dir / f"merge_{mid}.pfm", bundle.merge_masks[middle].data)
        lines.append(f"merge.{mid} = merge_{mid}.pfm")

    manifest = out_dir / MANIFEST
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("write_bundle: %s", manifest)
    return manifest


def read_bundle(bundle_dir: Path) -> TripletBundle:
    """Read a bundle written by :func:`write_bundle`.

    Images come back quantized to 8 bits and grids rounded to float32, as
    stored.

    Raises:
        FormatError: On a missing or inconsistent manifest entry.
        OSError: If a listed file cannot be read.
    """
    manifest_path = bundle_dir / MANIFEST
    try:
        entries = ConfigLoader(bundle_dir).load(manifest_path)
    except ConfigLoaderError as e:
        raise FormatError(f"Cannot read bundle manifest: {manifest_path}") from e

    def entry(key: str) -> str:
        if key not in entries:
            raise FormatError(f"Bundle manifest {manifest_path} lacks {key}")
        return entries[key]

    h, w = (int(v) for v in _parse_floats(entry("shape"), 2, "shape"))
    fx, fy, cx, cy = _parse_floats(entry("K"), 4, "K")
    temporal = entry("temporal")
    if temporal not in ("rendered", "interpolated"):
        raise FormatError(f"Unknown temporal source {temporal!r} in {manifest_path}")

    images: dict[int, ImageGrid] = {}
    depths: dict[int, ImageGrid] = {}
    poses: list[PoseSE3] = []
    for k in POSITIONS:
        tag = position_tag(k)
        images[k] = ImageGrid(read_ppm(bundle_dir / entry(f"frame.{tag}")))
        depths[k] = ImageGrid(read_pfm(bundle_dir / entry(f"depth.{tag}")))
        values = _parse_floats(entry(f"pose.{tag}"), 12, f"pose.{tag}")
        poses.append(PoseSE3(values[:9].reshape(3, 3), values[9:]))
        if images[k].shape != (h, w) or depths[k].shape != (h, w):
            raise FormatError(f"Frame {tag} does not match the manifest shape {(h, w)}")

    flows: dict[tuple[int, int], FlowField] = {}
    occlusions: dict[tuple[int, int], ValidityMask] = {}
    merge_masks: dict[int, MergeMask] = {}
    for middle, neighbours in INTERMEDIATES.items():
        mid = position_tag(middle)
        for other in neighbours:
            pair = f"{mid}_{position_tag(other)}"
            flows[(middle, other)] = FlowField.from_array(read_flo(bundle_dir / entry(f"flow.{pair}")))
            occlusions[(middle, other)] = ValidityMask(read_pfm(bundle_dir / entry(f"occlusion.{pair}"))[..., 0])
        merge_masks[middle] = MergeMask.from_array(read_pfm(bundle_dir / entry(f"merge.{mid}")))

    return TripletBundle(
        images=images,
        depths=depths,
        trajectory=Trajectory.from_poses(poses),
        K=Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy),
        flows=flows,
        occlusions=occlusions,
        merge_masks=merge_masks,
        temporal=temporal,  # type: ignore[arg-type]
    )
