"""Convergence studies: problem catalog, resolution ladders, references, orders and table files."""
import csv
import hashlib
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import jinja2

from errors import ConfigurationError, DomainError
from fem1d import Mesh1D, PowerLoad, assemble, prolong
from kernels import Scheme, check_alpha, epsilon_factor
from ode_stepper import Constant, Power, ScalarProblem, Sum, solve
from oracle import FINE_FACTOR, ExactEval, exact_scalar, fine_grid_reference
from pde_stepper import PdeProblem, l2_error, solve_pde
from templates import MARKDOWN_TEMPLATE
from utils import power_of_two_floor, step_label, step_ratio, study_filename, table_filename

logger = logging.getLogger(__name__)

SINGULAR_EXPONENT = -0.49
FINAL_TIME = 1.0


def _forcing():
    return Sum(Constant(1.0), Power(1.0, 0.2))


ODE_PROBLEMS = {
    'a': ScalarProblem(1.0, 0.0, 1.0),
    'b': ScalarProblem(0.0, 1.0, 1.0),
    'c': ScalarProblem(0.0, 0.0, 1.0, _forcing()),
}

PDE_PROBLEMS = {
    'd': PdeProblem(u0=PowerLoad(SINGULAR_EXPONENT)),
    'e': PdeProblem(u1=PowerLoad(SINGULAR_EXPONENT)),
    'f': PdeProblem(g=PowerLoad(SINGULAR_EXPONENT), q=_forcing()),
}


def is_ode(problem):
    if problem in ODE_PROBLEMS:
        return True
    if problem in PDE_PROBLEMS:
        return False
    raise ConfigurationError(f"unknown problem {problem!r}; expected one of a-f")


class Coupling(str, Enum):
    TIME = 'time'
    FIXED_TAU = 'fixed_tau'
    COUPLED = 'coupled'
    FIXED_H = 'fixed_h'


class ReferenceKind(str, Enum):
    FINE = 'fine'
    EXACT = 'exact'


@dataclass(frozen=True)
class ReferenceSpec:
    """Fine-grid or exact reference. tau_exp is one exponent or (alpha, exponent) pairs."""
    kind: ReferenceKind = ReferenceKind.FINE
    tau_exp: object = None
    h_exp: int = None

    @staticmethod
    def parse_tau_exp(value):
        if isinstance(value, dict):
            return tuple(sorted((float(alpha), int(exp)) for alpha, exp in value.items()))
        return None if value is None else int(value)

    @property
    def per_alpha(self):
        return isinstance(self.tau_exp, tuple)

    def tau_exp_for(self, alpha):
        if not self.per_alpha:
            return self.tau_exp
        for a, exp in self.tau_exp:
            if math.isclose(a, alpha):
                return exp
        raise ConfigurationError(f"reference tau_exp has no entry for alpha={alpha:g}")

    def label(self, scheme=Scheme.ML1, alpha=None):
        if self.kind is ReferenceKind.EXACT:
            return 'exact Mittag-Leffler'
        if alpha is not None or not self.per_alpha:
            steps = f'2^-{self.tau_exp_for(alpha)}'
        else:
            steps = ', '.join(f'2^-{exp} (alpha={a:g})' for a, exp in self.tau_exp)
        text = f'{Scheme.parse(scheme).value} tau={steps}'
        return text if self.h_exp is None else f'{text} h=2^-{self.h_exp}'


@dataclass(frozen=True)
class Level:
    label: str
    tau: float
    h: float = None

    @property
    def steps(self):
        return step_ratio(FINAL_TIME, self.tau)


@dataclass(frozen=True)
class StudyConfig:
    problem: str
    alphas: tuple
    ladder: tuple
    coupling: Coupling = Coupling.TIME
    schemes: tuple = (Scheme.L1, Scheme.ML1)
    fixed_exp: int = None
    reference: ReferenceSpec = ReferenceSpec()
    final_time: float = FINAL_TIME
    title: str = field(default=None, compare=False)
    check: dict = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        ode = is_ode(self.problem)
        if self.final_time != FINAL_TIME:
            raise ConfigurationError("studies measure errors at t = 1")
        if not self.alphas or not self.schemes:
            raise ConfigurationError("a study needs at least one alpha and one scheme")
        for alpha in self.alphas:
            try:
                check_alpha(alpha)
            except DomainError as exc:
                raise ConfigurationError(str(exc)) from exc
        if len(self.ladder) < 1 or any(b <= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ConfigurationError(f"ladder exponents must be strictly increasing, got {list(self.ladder)}")
        if ode != (self.coupling is Coupling.TIME):
            raise ConfigurationError(f"coupling {self.coupling.value} does not fit problem ({self.problem})")
        if self.coupling in (Coupling.FIXED_TAU, Coupling.FIXED_H) and self.fixed_exp is None:
            raise ConfigurationError(f"coupling {self.coupling.value} needs fixed_exp")
        ref = self.reference
        if ref.kind is ReferenceKind.EXACT and not ode:
            raise ConfigurationError("PDE studies use fine-grid references only")
        if ref.kind is ReferenceKind.FINE and ref.tau_exp is None:
            raise ConfigurationError("fine references need tau_exp")
        if ref.per_alpha:
            for alpha in self.alphas:
                ref.tau_exp_for(alpha)
        if not ode and ref.h_exp is None:
            raise ConfigurationError("PDE references need h_exp")

    @classmethod
    def from_mapping(cls, data, defaults=None):
        defaults = defaults or {}
        try:
            ode = is_ode(data['problem'])
            ref = dict(data.get('reference', {}))
            kind = ReferenceKind(ref.get('kind', 'fine'))
            tau_default = defaults.get('ODE_REF_TAU_EXP' if ode else 'PDE_REF_TAU_EXP')
            h_default = None if ode else defaults.get('PDE_REF_H_EXP')
            tau_exp = ref.get('tau_exp', tau_default) if kind is ReferenceKind.FINE else None
            reference = ReferenceSpec(
                kind,
                ReferenceSpec.parse_tau_exp(tau_exp),
                ref.get('h_exp', h_default))
            return cls(
                problem=data['problem'],
                alphas=tuple(float(a) for a in data['alphas']),
                ladder=tuple(int(e) for e in data['ladder']),
                coupling=Coupling(data.get('coupling', 'time')),
                schemes=tuple(Scheme.parse(s) for s in data.get('schemes', ('L1', 'ML1'))),
                fixed_exp=data.get('fixed_exp'),
                reference=reference,
                final_time=float(data.get('final_time', FINAL_TIME)),
                title=data.get('title'),
                check=data.get('check'))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"malformed study config: {exc!r}") from exc

    def with_reference(self, tau_exp=None, h_exp=None):
        ref = self.reference
        return replace(self, reference=replace(
            ref,
            tau_exp=ref.tau_exp if tau_exp is None else tau_exp,
            h_exp=ref.h_exp if h_exp is None else h_exp))

    def canonical(self):
        data = {
            'problem': self.problem,
            'alphas': list(self.alphas),
            'ladder': list(self.ladder),
            'coupling': self.coupling.value,
            'schemes': [s.value for s in self.schemes],
            'fixed_exp': self.fixed_exp,
            'reference': {k: (v.value if isinstance(v, Enum) else v) for k, v in asdict(self.reference).items()},
            'final_time': self.final_time,
        }
        return json.dumps(data, sort_keys=True, separators=(',', ':'))

    @property
    def stamp(self):
        return hashlib.sha1(self.canonical().encode('utf-8')).hexdigest()[:12]

    @property
    def resolution_name(self):
        return 'tau' if self.coupling in (Coupling.TIME, Coupling.FIXED_H) else 'h'

    def levels(self, alpha):
        out = []
        for e in self.ladder:
            step = 2.0 ** -e
            if self.coupling is Coupling.TIME:
                out.append(Level(step_label(step), step))
            elif self.coupling is Coupling.FIXED_H:
                out.append(Level(step_label(step), step, 2.0 ** -self.fixed_exp))
            elif self.coupling is Coupling.FIXED_TAU:
                out.append(Level(step_label(step), 2.0 ** -self.fixed_exp, step))
            else:
                out.append(Level(step_label(step), power_of_two_floor(step ** (2 / alpha)), step))
        return out


def load_presets(path, defaults=None):
    """One study mapping, or {"studies": [...]} sharing optional top-level keys."""
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read study config {path}: {exc}") from exc
    if 'studies' in data:
        shared = {k: v for k, v in data.items() if k != 'studies'}
        return [StudyConfig.from_mapping({**shared, **study}, defaults) for study in data['studies']]
    return [StudyConfig.from_mapping(data, defaults)]


@dataclass
class Row:
    resolution: str
    error: float
    order: float = None
    flagged: bool = False


@dataclass
class ConvergenceTable:
    rows: list
    metadata: dict = field(default_factory=dict)

    @property
    def errors(self):
        return [row.error for row in self.rows]

    @property
    def orders(self):
        return [row.order for row in self.rows[1:]]

    def to_csv(self):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(['resolution', 'error', 'order'])
        for row in self.rows:
            writer.writerow([row.resolution, f'{row.error:.6e}', '' if row.order is None else f'{row.order:.2f}'])
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text, metadata=None):
        rows = []
        for i, record in enumerate(csv.DictReader(io.StringIO(text))):
            order = float(record['order']) if record['order'] else None
            rows.append(Row(record['resolution'], float(record['error']), order, i > 0 and order is None))
        if not rows:
            raise ConfigurationError("table has no rows")
        return cls(rows, dict(metadata or {}))


def observed_order(errors):
    """log2 ratios of consecutive errors; None where a ratio is not computable."""
    if len(errors) < 2:
        raise DomainError("observed orders need at least two errors")
    return [math.log2(a / b) if a > 0 and b > 0 else None for a, b in zip(errors[:-1], errors[1:])]


def build_table(labels, errors, metadata):
    orders = [None] + observed_order(errors) if len(errors) > 1 else [None]
    rows = [Row(label, err, order, (i > 0 and order is None) or err <= 0)
            for i, (label, err, order) in enumerate(zip(labels, errors, orders))]
    return ConvergenceTable(rows, metadata)


def predicted_order(problem, scheme, alpha, tau):
    """Order expected at t = 1 between tau and tau/2."""
    if Scheme.parse(scheme) is Scheme.ML1:
        return 2.0
    base = 3 - alpha
    if problem == 'c':
        base += math.log2(epsilon_factor(alpha, tau, round(1 / tau) - 1)
                          / epsilon_factor(alpha, tau / 2, round(2 / tau) - 1))
    return base


def reference_scheme(cfg, scheme, alpha=None):
    """The study's own scheme when the reference shares the fixed tau, ML1 otherwise."""
    if cfg.coupling is Coupling.FIXED_TAU and cfg.reference.tau_exp_for(alpha) == cfg.fixed_exp:
        return Scheme.parse(scheme)
    return Scheme.ML1


def _ode_reference(cfg, alpha, scheme, levels):
    problem = ODE_PROBLEMS[cfg.problem]
    if cfg.reference.kind is ReferenceKind.EXACT:
        return exact_scalar(ExactEval(problem, alpha), FINAL_TIME)
    tau_ref = 2.0 ** -cfg.reference.tau_exp_for(alpha)
    history = fine_grid_reference(scheme, problem, alpha, tau_ref, [lv.tau for lv in levels])
    return history.final


def check_nesting(step, ref_step, name, shared=False):
    """The reference step must divide the study step and be FINE_FACTOR times finer, unless shared."""
    ratio = step_ratio(step, ref_step)
    if ratio < FINE_FACTOR and not (shared and ratio == 1):
        raise ConfigurationError(f"reference {name}={step_label(ref_step)} is not {FINE_FACTOR}x finer "
                                 f"than study {name}={step_label(step)}")
    return ratio


def _pde_reference(cfg, alpha, scheme, levels):
    ref = cfg.reference
    mesh = Mesh1D(2 ** ref.h_exp)
    tau_ref = 2.0 ** -ref.tau_exp_for(alpha)
    for lv in levels:
        check_nesting(lv.tau, tau_ref, 'tau', shared=cfg.coupling is Coupling.FIXED_TAU)
        check_nesting(lv.h, mesh.h, 'h', shared=cfg.coupling is Coupling.FIXED_H)
    logger.info(f"PDE reference for alpha={alpha:g}: {ref.label(scheme, alpha)}")
    history = solve_pde(PDE_PROBLEMS[cfg.problem], scheme, alpha, tau_ref, step_ratio(FINAL_TIME, tau_ref), mesh)
    return history.final


def _run_reference(task):
    cfg, alpha, scheme = task
    levels = cfg.levels(alpha)
    if is_ode(cfg.problem):
        return _ode_reference(cfg, alpha, scheme, levels)
    return _pde_reference(cfg, alpha, scheme, levels)


def _run_cell(task):
    cfg, alpha, scheme, level, reference = task
    if is_ode(cfg.problem):
        value = solve(ODE_PROBLEMS[cfg.problem], scheme, alpha, level.tau, level.steps).final
        return abs(value - reference)
    mesh = Mesh1D.from_step(level.h)
    final = solve_pde(PDE_PROBLEMS[cfg.problem], scheme, alpha, level.tau, level.steps, mesh).final
    ref_mesh = Mesh1D(2 ** cfg.reference.h_exp)
    return l2_error(prolong(final, mesh, ref_mesh), reference, assemble(ref_mesh))


def _map(func, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, tasks))
    return [func(task) for task in tasks]


def table_metadata(cfg, alpha, scheme, levels):
    meta = {
        'problem': cfg.problem,
        'alpha': alpha,
        'scheme': Scheme.parse(scheme).value,
        'coupling': cfg.coupling.value,
        'reference': cfg.reference.label(reference_scheme(cfg, scheme, alpha), alpha),
        'stamp': cfg.stamp,
        'resolution': cfg.resolution_name,
        'levels': [{'label': lv.label, 'tau': lv.tau, 'h': lv.h} for lv in levels],
    }
    if cfg.coupling is Coupling.COUPLED:
        meta['rounding'] = 'tau = largest power of two not above h^(2/alpha)'
    return meta


def run_study(cfg, jobs=1):
    """One ConvergenceTable per (alpha, scheme), in config order."""
    keys = list(dict.fromkeys((alpha, reference_scheme(cfg, s, alpha))
                              for alpha in cfg.alphas for s in cfg.schemes))
    references = dict(zip(keys, _map(_run_reference, [(cfg, a, s) for a, s in keys], jobs)))
    tasks = []
    for alpha in cfg.alphas:
        for scheme in cfg.schemes:
            reference = references[(alpha, reference_scheme(cfg, scheme, alpha))]
            tasks.extend((cfg, alpha, scheme, lv, reference) for lv in cfg.levels(alpha))
    errors = iter(_map(_run_cell, tasks, jobs))

    tables = []
    for alpha in cfg.alphas:
        levels = cfg.levels(alpha)
        for scheme in cfg.schemes:
            column = [next(errors) for _ in levels]
            tables.append(build_table([lv.label for lv in levels], column,
                                      table_metadata(cfg, alpha, scheme, levels)))
            logger.info(f"Problem ({cfg.problem}) {Scheme.parse(scheme).value} alpha={alpha}: "
                        f"orders {[None if o is None else round(o, 2) for o in tables[-1].orders]}")
    return tables


def _expected_at(mapping, scheme, alpha):
    block = (mapping or {}).get(Scheme.parse(scheme).value, {})
    return block.get(f'{alpha:g}')


def check_tables(cfg, tables):
    """Violations of the config's acceptance block; empty when everything passes."""
    check = cfg.check or {}
    tolerance = check.get('tolerance', 0.15)
    problems = []
    for table in tables:
        scheme, alpha = table.metadata['scheme'], table.metadata['alpha']
        where = f"problem ({cfg.problem}) {scheme} alpha={alpha:g}"
        expected = _expected_at(check.get('expected'), scheme, alpha)
        if expected is not None:
            targets = expected if isinstance(expected, list) else [expected] * len(table.orders)
            for target, order in zip(targets, table.orders):
                if order is None or abs(order - target) > tolerance:
                    problems.append(f"{where}: order {order} not within {tolerance} of {target}")
        floor = _expected_at(check.get('at_least'), scheme, alpha)
        if floor is not None:
            for order in table.orders:
                if order is None or order < floor:
                    problems.append(f"{where}: order {order} below {floor}")
        increasing = check.get('increasing', {})
        if alpha in increasing.get(scheme, []):
            errs = table.errors
            if any(b <= a for a, b in zip(errs, errs[1:])):
                problems.append(f"{where}: errors are not strictly increasing")
    return problems


def _environment():
    return jinja2.Environment(trim_blocks=True, lstrip_blocks=True, keep_trailing_newline=True,
                              autoescape=False, undefined=jinja2.StrictUndefined)


def render_text(template, **context):
    return _environment().from_string(template).render(**context)


def render_markdown(tables, title=None):
    """All tables of one study side by side: rows are resolutions, columns (alpha, scheme) pairs."""
    if not tables:
        raise ConfigurationError("nothing to render")
    first = tables[0].metadata
    labels = [row.resolution for row in tables[0].rows]
    columns = [f"α={t.metadata['alpha']:g} {t.metadata['scheme']}" for t in tables]
    rows = []
    for i, label in enumerate(labels):
        cells = []
        for table in tables:
            row = table.rows[i] if i < len(table.rows) else None
            cells.append({
                'error': '' if row is None else f'{row.error:.2e}',
                'order': '--' if row is None or row.order is None else f'{row.order:.2f}',
            })
        rows.append({'label': label, 'cells': cells})
    return render_text(
        MARKDOWN_TEMPLATE,
        title=title or f"Problem ({first['problem']})",
        stamp=first.get('stamp', ''),
        coupling=first.get('coupling', ''),
        reference='; '.join(dict.fromkeys(t.metadata.get('reference', '') for t in tables)),
        resolution_name=first.get('resolution', 'tau'),
        columns=columns,
        rows=rows)


def _write(path, text):
    try:
        with open(path, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from exc
    return path


def _ensure_folder(folder):
    try:
        os.makedirs(folder, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output folder {folder}: {exc}") from exc


def emit_table(table, fmt, folder):
    """Write one table (CSV plus JSON sidecar, or Markdown) and return the paths written."""
    meta = table.metadata
    _ensure_folder(folder)
    if fmt == 'csv':
        base = os.path.join(folder, table_filename(meta['stamp'], meta['problem'], meta['scheme'], meta['alpha'], 'csv'))
        sidecar = base[:-len('csv')] + 'json'
        return [_write(base, table.to_csv()),
                _write(sidecar, json.dumps(meta, indent=2, sort_keys=True) + '\n')]
    if fmt == 'md':
        path = os.path.join(folder, table_filename(meta['stamp'], meta['problem'], meta['scheme'], meta['alpha'], 'md'))
        return [_write(path, render_markdown([table]))]
    raise ConfigurationError(f"unknown table format {fmt!r}")


def emit_study(cfg, tables, fmt, folder):
    if fmt == 'md':
        _ensure_folder(folder)
        return [_write(os.path.join(folder, study_filename(cfg.stamp, cfg.problem, 'md')), render_markdown(tables, cfg.title))]
    paths = []
    for table in tables:
        paths.extend(emit_table(table, fmt, folder))
    return paths
