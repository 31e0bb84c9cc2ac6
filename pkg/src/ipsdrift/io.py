"""File formats: drift models (JSON), trajectories and measure flows (JSON header + f64le)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import FourierDriftModel, ModeLattice
from .simulate import MeasureFlow, TrajectoryDataset

_F64 = np.dtype("<f8")


def model_to_dict(model: FourierDriftModel) -> dict:
    return {
        "dim": model.dim,
        "K_G": model.kg,
        "K_F": model.kf,
        "modes": {"g": model.g_lattice.modes.tolist(), "f": model.f_lattice.modes.tolist()},
        "g_coeffs": {"cos": model.g_cos.tolist(), "sin": model.g_sin.tolist()},
        "f_coeffs": {"cos": model.f_cos.tolist(), "sin": model.f_sin.tolist()},
    }


def model_from_dict(doc: dict) -> FourierDriftModel:
    dim, kg, kf = int(doc["dim"]), int(doc["K_G"]), int(doc["K_F"])
    g_modes = ModeLattice(dim, kg).modes.tolist()
    f_modes = ModeLattice(dim, kf).modes.tolist()
    modes = doc.get("modes")
    if modes is not None and (modes["g"] != g_modes or modes["f"] != f_modes):
        raise ValueError("mode list does not match the canonical lattice ordering")

    def arr(a, n):
        return np.asarray(a, dtype=float).reshape(dim, n)

    ng, nf = len(g_modes), len(f_modes)
    return FourierDriftModel(dim, kg, kf,
                             arr(doc["g_coeffs"]["cos"], ng + 1), arr(doc["g_coeffs"]["sin"], ng),
                             arr(doc["f_coeffs"]["cos"], nf), arr(doc["f_coeffs"]["sin"], nf))


def save_model(model: FourierDriftModel, path) -> None:
    # json writes floats with repr, the shortest string that round-trips
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path) -> FourierDriftModel:
    return model_from_dict(json.loads(Path(path).read_text()))


def _write(path, header: dict, *arrays) -> None:
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype=_F64).tobytes())


def _read(path) -> tuple[dict, memoryview]:
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    header = json.loads(data[:nl])
    if header.get("format") != "f64le":
        raise ValueError("unsupported binary format")
    return header, memoryview(data)[nl + 1:]


def save_trajectory(ds: TrajectoryDataset, path) -> None:
    header = {"d": ds.d, "N": ds.n, "T": ds.T, "M": ds.m, "dt": ds.dt, "seed": ds.seed,
              "format": "f64le"}
    _write(path, header, ds.positions, ds.increments)


def load_trajectory(path) -> TrajectoryDataset:
    h, body = _read(path)
    d, n, m = h["d"], h["N"], h["M"]
    flat = np.frombuffer(body, dtype=_F64)
    npos = (m + 1) * n * d
    if flat.size != npos + m * n * d:
        raise ValueError("trajectory payload has the wrong length")
    pos = flat[:npos].reshape(m + 1, n, d).copy()
    inc = flat[npos:].reshape(m, n, d).copy()
    return TrajectoryDataset(pos, inc, float(h["T"]), int(h["seed"]))


def save_flow(flow: MeasureFlow, path, ensemble=None) -> None:
    """Flow coefficients as interleaved (re, im) pairs, optionally followed by ensemble positions."""
    lat = flow.lattice
    header = {"d": lat.dim, "K": lat.max_norm, "include_zero": lat.include_zero,
              "modes": lat.all_modes.tolist(), "n_ref": flow.n_ref, "seed": flow.seed,
              "T": flow.T, "M": flow.m, "has_positions": ensemble is not None, "format": "f64le"}
    arrays = [np.stack([flow.coeffs.real, flow.coeffs.imag], axis=-1)]
    if ensemble is not None:
        arrays.append(ensemble)
    _write(path, header, *arrays)


def load_flow(path) -> tuple[MeasureFlow, np.ndarray | None]:
    h, body = _read(path)
    lat = ModeLattice(h["d"], h["K"], h["include_zero"])
    if h["modes"] != lat.all_modes.tolist():
        raise ValueError("flow modes do not match the canonical lattice ordering")
    m, nm = h["M"], len(lat.all_modes)
    flat = np.frombuffer(body, dtype=_F64)
    nc = (m + 1) * nm * 2
    # (re, im) pairs reinterpreted in place; arithmetic would lose signed zeros
    c = flat[:nc].astype(np.float64).view(np.complex128).reshape(m + 1, nm)
    flow = MeasureFlow(lat, float(h["T"]), c, int(h["n_ref"]), int(h["seed"]))
    ens = None
    if h["has_positions"]:
        ens = flat[nc:].reshape(m + 1, h["n_ref"], h["d"]).copy()
    return flow, ens


def save_normal_equations(ne, path) -> None:
    header = {"p": ne.p, "d": ne.dim, "K_G": ne.kg, "K_F": ne.kf, "labels": ne.labels(),
              "format": "f64le"}
    _write(path, header, ne.gram, ne.response)
