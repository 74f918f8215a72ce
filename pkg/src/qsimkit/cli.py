"""Command-line front end: ``qsimkit <command> [options]``.

Every command accepts ``--config FILE`` (a JSON object whose keys are the
option names, with underscores) and explicit flags, which take precedence.
The resolved configuration, including a generated seed when none was given,
is embedded in the result JSON so that ``qsimkit --replay RESULT`` repeats
the run exactly.  Results are written only after the computation succeeds,
through a temporary file that is renamed into place.

Exit codes: 0 on success, 2 for input errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import secrets
import sys
import tempfile
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import __version__
from .dynamics.qpe import qpe_energy
from .dynamics.trotter import a_priori_bound, fit_loglog_slope, operator_error
from .eigen.ansatz import hardware_efficient_ansatz, uccsd_ansatz
from .eigen.optimize import OptimizerConfig
from .eigen.qite import qite
from .eigen.vqe import vqe_minimize
from .errors import ArgumentError, InputError, NumericalError, ParseError
from .fermion import (
    build_molecular_hamiltonian,
    encode,
    find_z2_symmetries,
    hartree_fock_occupation,
    number_operator,
    occupation_to_qubits,
    sz_operator,
    taper,
)
from .hamio import pauli_sum_from_json, pauli_sum_to_json, read_fcidump
from .noise import ReadoutCalibration, calibrate_readout, mitigate_readout, zne
from .pauli import PauliSum

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(InputError):
    """The configuration does not match the command's options."""


# -- option schema -----------------------------------------------------------------------------


def _int_list(text: str | Sequence[int]) -> list[int]:
    if isinstance(text, str):
        try:
            return [int(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise ConfigError(f"expected comma-separated integers, got {text!r}") from None
    return [int(t) for t in text]


def _bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("1", "true", "yes", "on", "0", "false", "no", "off"):
        return value.lower() in ("1", "true", "yes", "on")
    raise ConfigError(f"expected a boolean, got {value!r}")


@dataclass(frozen=True)
class Option:
    name: str
    type: Callable[[Any], Any]
    default: Any
    help: str
    choices: tuple | None = None
    path: bool = False

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")

    def coerce(self, value: Any) -> Any:
        if value is None:
            return None
        try:
            out = self.type(value)
        except (TypeError, ValueError):
            raise ConfigError(f"option {self.name}: cannot interpret {value!r}") from None
        if self.choices is not None and out not in self.choices:
            raise ConfigError(f"option {self.name}: {out!r} is not one of {list(self.choices)}")
        return out


_INPUT = [
    Option("fcidump", str, None, "FCIDUMP integral file", path=True),
    Option("hamiltonian", str, None, "Pauli-sum JSON file (alternative to --fcidump)", path=True),
    Option("scheme", str, "jw", "fermion-to-qubit encoding", ("jw", "parity", "bk")),
]
_SEED = [Option("seed", int, None, "RNG seed (generated and recorded when absent)")]

COMMANDS: dict[str, tuple[str, list[Option]]] = {
    "map": (
        "encode an FCIDUMP Hamiltonian as a Pauli sum, optionally tapered",
        _INPUT[:1] + _INPUT[2:] + _SEED + [
            Option("taper", _bool, False, "remove Z2 symmetry qubits"),
            Option("sector", str, None, "symmetry eigenvalues, e.g. '-1,1,-1' (default: Hartree-Fock sector)"),
            Option("pauli_out", str, None, "also write the bare Pauli-sum JSON here"),
        ],
    ),
    "evolve": (
        "product-formula error sweep over Trotter step counts",
        _INPUT + _SEED + [
            Option("time", float, 1.0, "evolution time"),
            Option("steps", _int_list, [4, 8, 16, 32], "comma-separated Trotter step counts"),
            Option("orders", _int_list, [1, 2], "comma-separated product-formula orders"),
        ],
    ),
    "vqe": (
        "variational ground-state energy",
        _INPUT + _SEED + [
            Option("ansatz", str, "uccsd", "ansatz family", ("uccsd", "hea")),
            Option("layers", int, 2, "hardware-efficient entangling layers"),
            Option("optimizer", str, "bfgs", "classical optimizer", ("bfgs", "spsa", "adam", "gd")),
            Option("maxiter", int, 200, "optimizer iteration budget"),
            Option("average", int, 0, "SPSA iterate averaging window"),
            Option("mode", str, "exact", "energy evaluation", ("exact", "shots")),
            Option("shots", int, None, "shots per commuting group in shots mode"),
            Option("qubit_wise", _bool, False, "group terms by qubit-wise commutation"),
        ],
    ),
    "qpe": (
        "phase-estimation energy estimate",
        _INPUT + _SEED + [
            Option("ancillae", int, 6, "readout register size"),
            Option("e1", float, None, "lower energy of the phase window (default: norm bound)"),
            Option("e2", float, None, "upper energy of the phase window (default: norm bound)"),
            Option("state", str, "reference", "input state", ("reference", "ground")),
            Option("shots", int, None, "readout samples (exact distribution when absent)"),
        ],
    ),
    "qite": (
        "quantum imaginary-time evolution energy trace",
        _INPUT + _SEED + [
            Option("dtau", float, 0.1, "imaginary-time step"),
            Option("steps", int, 100, "number of steps"),
            Option("domain", _int_list, None, "comma-separated qubits of the fitted unitaries (default: all)"),
        ],
    ),
    "spectrum": (
        "dense eigenvalues, restricted to the FCIDUMP electron sector by default",
        _INPUT + _SEED + [
            Option("levels", int, 10, "number of eigenvalues reported"),
            Option("restrict", _bool, None, "restrict to the FCIDUMP particle-number and spin sector"),
        ],
    ),
    "mitigate": (
        "readout correction or zero-noise extrapolation of recorded data",
        _SEED + [
            Option("method", str, "readout", "mitigation protocol", ("readout", "zne")),
            Option("data", str, None, "JSON data file", path=True),
            Option("order", int, None, "Richardson order (default: number of scales - 1)"),
        ],
    ),
}


def resolve_config(command: str, file_values: dict | None, flag_values: dict) -> dict:
    """Defaults, then the config file, then explicit flags; validated and coerced."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    opts = {o.name: o for o in COMMANDS[command][1]}
    cfg = {name: o.default for name, o in opts.items()}
    for source in (file_values or {}, flag_values):
        unknown = set(source) - set(opts)
        if unknown:
            raise ConfigError(f"unknown options for {command}: {sorted(unknown)}")
        for k, v in source.items():
            cfg[k] = opts[k].coerce(v)
    for name, o in opts.items():
        if o.path and cfg[name] is not None and not os.path.isfile(cfg[name]):
            raise ConfigError(f"{name}: file {cfg[name]!r} does not exist")
    if cfg.get("seed") is None:
        cfg["seed"] = secrets.randbits(63)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# -- Hamiltonian loading ---------------------------------------------------------------------


@dataclass
class Problem:
    hamiltonian: PauliSum
    reference: int
    n_electrons: int | None = None
    n_spatial: int | None = None
    ms2: int | None = None
    scheme: str = "jw"


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load_problem(cfg: dict) -> Problem:
    if (cfg.get("fcidump") is None) == (cfg.get("hamiltonian") is None):
        raise ConfigError("give exactly one of --fcidump and --hamiltonian")
    if cfg.get("fcidump") is not None:
        path = cfg["fcidump"]
        try:
            ints = read_fcidump(path)
        except ParseError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        op = build_molecular_hamiltonian(ints)
        h = encode(op, cfg["scheme"])
        hf = hartree_fock_occupation(ints.n_spatial, ints.n_up, ints.n_down)
        ref = occupation_to_qubits(hf, 2 * ints.n_spatial, cfg["scheme"])
        return Problem(h, ref, ints.n_electrons, ints.n_spatial, ints.ms2, cfg["scheme"])
    path = cfg["hamiltonian"]
    try:
        h = pauli_sum_from_json(_read_text(path))
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return Problem(h, 0)


def sector_basis(problem: Problem) -> np.ndarray:
    """Basis indices with the FCIDUMP electron count and spin (diagonal in every linear encoding)."""
    m = 2 * problem.n_spatial
    n_op = np.real(np.diag(encode(number_operator(m), problem.scheme).to_dense()))
    sz = np.real(np.diag(encode(sz_operator(problem.n_spatial), problem.scheme).to_dense()))
    keep = (np.abs(n_op - problem.n_electrons) < 1e-9) & (np.abs(2 * sz - problem.ms2) < 1e-9)
    return np.flatnonzero(keep)


def _dense_ground(problem: Problem, restrict: bool) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and ground vector, in the electron sector when ``restrict``."""
    hd = problem.hamiltonian.to_dense()
    if restrict and problem.n_electrons is not None:
        idx = sector_basis(problem)
        w, v = np.linalg.eigh(hd[np.ix_(idx, idx)])
        g = np.zeros(hd.shape[0], dtype=complex)
        g[idx] = v[:, 0]
        return w, g
    w, v = np.linalg.eigh(hd)
    return w, v[:, 0]


# -- commands --------------------------------------------------------------------------------

Output = tuple[dict, list[dict] | None]


def cmd_map(cfg: dict) -> Output:
    problem = load_problem(cfg)
    h = problem.hamiltonian
    report: dict[str, Any] = {"scheme": cfg["scheme"], "n_qubits": h.n_qubits, "n_terms": len(h)}
    if cfg["taper"]:
        syms = find_z2_symmetries(h)
        if cfg["sector"] is not None:
            vals = _int_list(cfg["sector"])
            if len(vals) != len(syms) or any(v not in (1, -1) for v in vals):
                raise ConfigError(f"sector needs {len(syms)} entries of +1 or -1")
            sector = syms.sector(vals)
        else:
            ref = np.zeros(1 << h.n_qubits)
            ref[problem.reference] = 1.0
            sector = syms.sector_of_state(ref)
        h = taper(h, sector)
        report.update(
            tapered_qubits=h.n_qubits,
            tapered_terms=len(h),
            generators=[g.label for g in syms.generators],
            sector=list(sector.eigenvalues),
        )
    pauli = json.loads(pauli_sum_to_json(h))
    extra = {"pauli_out": pauli_sum_to_json(h) + "\n"} if cfg["pauli_out"] else {}
    return {"report": report, "hamiltonian": pauli, **extra}, None


def cmd_evolve(cfg: dict) -> Output:
    h = load_problem(cfg).hamiltonian
    steps = cfg["steps"]
    if not steps or min(steps) < 1:
        raise ConfigError("steps must be positive integers")
    rows, slopes = [], {}
    for order in cfg["orders"]:
        errs = []
        for n in steps:
            err = operator_error(h, cfg["time"], n, order)
            errs.append(err)
            rows.append({"order": order, "n_steps": n, "error": err, "bound": a_priori_bound(h, cfg["time"], n, order)})
        if len(steps) > 1 and min(errs) > 0:
            slopes[str(order)] = fit_loglog_slope(steps, errs)
    return {"points": rows, "slopes": slopes, "time": cfg["time"]}, rows


def cmd_vqe(cfg: dict) -> Output:
    problem = load_problem(cfg)
    h = problem.hamiltonian
    if cfg["ansatz"] == "uccsd":
        if problem.n_electrons is None or cfg["scheme"] != "jw":
            raise ConfigError("the UCCSD ansatz needs an FCIDUMP input with the jw scheme")
        ansatz = uccsd_ansatz(h.n_qubits, problem.n_electrons, problem.reference)
    else:
        ansatz = hardware_efficient_ansatz(h.n_qubits, cfg["layers"], problem.reference)
    theta0 = None
    if ansatz.kind == "hardware_efficient":
        # theta = 0 is a stationary point of the entangling chain; start from small seeded angles
        theta0 = 0.1 * np.random.default_rng(cfg["seed"]).standard_normal(ansatz.n_params)
    opt = OptimizerConfig(kind=cfg["optimizer"], maxiter=cfg["maxiter"], seed=cfg["seed"], average=cfg["average"])
    res = vqe_minimize(
        h, ansatz, opt, mode=cfg["mode"], shots=cfg["shots"], theta0=theta0, seed=cfg["seed"], qubit_wise=cfg["qubit_wise"]
    )
    w, _ = _dense_ground(problem, restrict=True)
    out = res.to_dict()
    out["reference_ground_energy"] = float(w[0])
    out["ansatz"] = ansatz.kind
    out["parameter_names"] = ansatz.parameters
    rows = [{"iteration": k + 1, "energy": e} for k, e in enumerate(res.trace)]
    return out, rows


def cmd_qpe(cfg: dict) -> Output:
    problem = load_problem(cfg)
    h = problem.hamiltonian
    norm = float(sum(abs(c) for p, c in h.items() if p.weight))
    const = float(np.real(h.constant()))
    e1 = const - norm - 1e-3 if cfg["e1"] is None else cfg["e1"]
    e2 = const + norm + 1e-3 if cfg["e2"] is None else cfg["e2"]
    if e2 <= e1:
        raise ConfigError("e2 must exceed e1")
    w, g = _dense_ground(problem, restrict=True)
    if cfg["state"] == "ground":
        psi = g
    else:
        psi = np.zeros(1 << h.n_qubits, dtype=complex)
        psi[problem.reference] = 1.0
    energy, res = qpe_energy(h, psi, cfg["ancillae"], e1, e2, cfg["shots"], cfg["seed"])
    resolution = (e2 - e1) / (1 << cfg["ancillae"])
    out = {
        "energy": energy,
        "window": [e1, e2],
        "resolution": resolution,
        "reference_ground_energy": float(w[0]),
        "qpe": res.to_dict(),
    }
    rows = [{"outcome": k, "probability": float(p)} for k, p in enumerate(res.probabilities)]
    return out, rows


def cmd_qite(cfg: dict) -> Output:
    problem = load_problem(cfg)
    h = problem.hamiltonian
    psi = np.zeros(1 << h.n_qubits, dtype=complex)
    psi[problem.reference] = 1.0
    res = qite(h, psi, cfg["dtau"], cfg["steps"], domain=cfg["domain"], oracle=True)
    w, _ = _dense_ground(problem, restrict=True)
    out = res.to_dict()
    out["final_energy"] = float(res.energies[-1])
    out["reference_ground_energy"] = float(w[0])
    out["max_deviation_from_dense"] = float(np.max(np.abs(res.energies - res.reference_energies)))
    rows = [
        {"tau": float(t), "energy": float(e), "dense_energy": float(r)}
        for t, e, r in zip(res.taus, res.energies, res.reference_energies)
    ]
    return out, rows


def cmd_spectrum(cfg: dict) -> Output:
    problem = load_problem(cfg)
    restrict = cfg["restrict"]
    if restrict is None:
        restrict = problem.n_electrons is not None
    if restrict and problem.n_electrons is None:
        raise ConfigError("sector restriction needs an FCIDUMP input")
    w, _ = _dense_ground(problem, restrict)
    levels = [float(e) for e in w[: cfg["levels"]]]
    return {"ground_energy": levels[0], "eigenvalues": levels, "restricted": bool(restrict), "dimension": int(w.size)}, None


def cmd_mitigate(cfg: dict) -> Output:
    if cfg["data"] is None:
        raise ConfigError("mitigate needs --data")
    try:
        data = json.loads(_read_text(cfg["data"]))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{cfg['data']}: {exc.msg}", line=exc.lineno, position=exc.colno) from exc
    if not isinstance(data, dict):
        raise ConfigError("data file must hold a JSON object")
    if cfg["method"] == "readout":
        for key in ("calibration", "distribution"):
            if key not in data:
                raise ConfigError(f"readout data needs {key!r}")
        cal: ReadoutCalibration = calibrate_readout(data["calibration"], data.get("ideal"), data.get("shots"))
        mit = mitigate_readout(data["distribution"], cal)
        return {"calibration": cal.to_dict(), "mitigated": mit.to_dict()}, None
    for key in ("scales", "values"):
        if key not in data:
            raise ConfigError(f"zne data needs {key!r}")
    res = zne(data["values"], data["scales"], cfg["order"], data.get("sigmas"))
    return res.to_dict(), None


HANDLERS: dict[str, Callable[[dict], Output]] = {
    "map": cmd_map,
    "evolve": cmd_evolve,
    "vqe": cmd_vqe,
    "qpe": cmd_qpe,
    "qite": cmd_qite,
    "spectrum": cmd_spectrum,
    "mitigate": cmd_mitigate,
}


# -- output ----------------------------------------------------------------------------------


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def build_envelope(command: str, cfg: dict, result: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "version": __version__,
        "result": _jsonable(result),
    }


def dumps(envelope: dict) -> str:
    return json.dumps(envelope, sort_keys=True, indent=2, allow_nan=False) + "\n"


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qsimkit-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def execute(command: str, cfg: dict) -> tuple[str, str | None, str | None]:
    """Run a command; returns the result JSON text, the CSV text and the bare Pauli JSON (map only)."""
    result, rows = HANDLERS[command](cfg)
    pauli_text = result.pop("pauli_out", None)
    text = dumps(build_envelope(command, cfg, result))
    return text, rows_to_csv(rows) if rows else None, pauli_text


# -- argument parsing ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsimkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qsimkit {__version__}")
    parser.add_argument("--replay", metavar="RESULT", help="re-run the command recorded in a result JSON file")
    parser.add_argument("--output", "-o", metavar="FILE", help="result JSON path (default: standard output)")
    parser.add_argument("--csv", metavar="FILE", help="write the command's data series as CSV")
    sub = parser.add_subparsers(dest="command")
    for name, (help_text, opts) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", metavar="FILE", help="JSON object of option values")
        p.add_argument("--output", "-o", metavar="FILE", help="result JSON path (default: standard output)")
        p.add_argument("--csv", metavar="FILE", help="write the command's data series as CSV")
        for o in opts:
            shown = o.help if o.default is None else f"{o.help} (default: {o.default})"
            kwargs: dict[str, Any] = {"dest": o.name, "help": shown}
            if o.type is _bool:
                kwargs["nargs"] = "?"
                kwargs["const"] = True
                kwargs["type"] = str
            else:
                kwargs["type"] = str
                kwargs["metavar"] = o.name.upper()
            p.add_argument(o.flag, **kwargs)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        data = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno, position=exc.colno) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def _replay(path: str) -> tuple[str, dict]:
    try:
        env = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno, position=exc.colno) from exc
    if not isinstance(env, dict) or env.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"{path}: not a result file of schema version {SCHEMA_VERSION}")
    cfg = env.get("config")
    command = env.get("command")
    if not isinstance(cfg, dict) or command not in COMMANDS:
        raise ConfigError(f"{path}: result file lacks a valid command and config")
    if config_hash(cfg) != env.get("config_hash"):
        raise ConfigError(f"{path}: config hash mismatch")
    return command, resolve_config(command, cfg, {})


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    output = args.pop("output", None)
    csv_path = args.pop("csv", None)
    replay = args.pop("replay", None)
    command = args.pop("command", None)
    try:
        if replay is not None:
            if command is not None:
                raise ArgumentError("--replay cannot be combined with a command")
            command, cfg = _replay(replay)
        else:
            if command is None:
                parser.print_help(sys.stderr)
                return EXIT_INPUT
            config_file = args.pop("config", None)
            file_values = _load_config_file(config_file) if config_file else None
            cfg = resolve_config(command, file_values, args)
        text, csv_text, pauli_text = execute(command, cfg)
        if csv_path and csv_text is None:
            raise ArgumentError(f"{command} produces no data series")
        if pauli_text is not None:
            atomic_write(cfg["pauli_out"], pauli_text)
        if csv_path:
            atomic_write(csv_path, csv_text)
        if output:
            atomic_write(output, text)
        else:
            sys.stdout.write(text)
    except (InputError, OSError) as exc:
        print(f"qsimkit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"qsimkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
