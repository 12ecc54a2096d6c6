import math
import os
import sys

import click
import numpy as np
from flask import current_app

from errors import CertificateError, ConfigurationError, FracWaveError
from experiments import (ODE_PROBLEMS, check_tables, emit_study, load_presets, render_markdown,
                         render_text, run_study)
from fem1d import Mesh1D
from kernels import Scheme, beta_correction, betahat_regular, certify_denominator, certify_positivity, default_contour
from models import StudyRun, record_tables
from oracle import ExactEval, Method, exact_scalar, fine_grid_reference
from pde_stepper import ratio_diagnostic
from templates import CERTIFY_TEMPLATE, HISTORY_TEMPLATE, ORACLE_TEMPLATE, RATIO_TEMPLATE, STUDY_SUMMARY_TEMPLATE
from utils import allowed_file, parse_step, step_exponent

ORACLE_ALPHAS = (1.2, 1.5, 1.8)
ORACLE_TOLERANCE = 1e-6
CERTIFY_ALPHAS = (1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9)
CERTIFY_MUS = (0.01, 0.1, 1.0)
ZETA_TERMS = 100_000
LIMIT_TOLERANCE = 1e-8


def _fail(message):
    current_app.logger.error(message)
    sys.exit(1)


def _preset_path(name):
    if os.path.exists(name):
        return name
    candidate = os.path.join(current_app.config['PRESET_FOLDER'], name)
    if not allowed_file(candidate, {'json'}):
        candidate += '.json'
    if not os.path.exists(candidate):
        raise ConfigurationError(f"no study config named {name!r}")
    return candidate


def correction_partial_sum(alpha, terms=ZETA_TERMS):
    """beta_1 - b_1 from the defining series, with an integral tail."""
    k = np.arange(1, terms + 1, dtype=float)
    p = alpha - 3
    head = np.sum((2 * math.pi * k[::-1]) ** p)
    tail = (2 * math.pi) ** p * (terms + 0.5) ** (p + 1) / -(p + 1)
    return 2 * math.sin(alpha * math.pi / 2) * (head + tail)


def register_commands(app):
    @app.cli.command('study')
    @click.argument('config_path')
    @click.option('--format', 'fmt', default=None, help='csv or md')
    @click.option('--out', default=None, help='Output folder')
    @click.option('--ref-tau', default=None, help='Reference time step, e.g. 2^-16')
    @click.option('--ref-h', default=None, help='Reference mesh size, e.g. 2^-9')
    @click.option('--jobs', type=int, default=None)
    @click.option('--check', is_flag=True, help='Compare orders with the config\'s expectations')
    @click.option('--record', is_flag=True, help='Store the tables in the run ledger')
    def study(config_path, fmt, out, ref_tau, ref_h, jobs, check, record):
        """Run the convergence studies of a JSON config."""
        config = current_app.config
        fmt = (fmt or config['TABLE_FORMAT']).lower()
        if fmt not in config['ALLOWED_FORMATS']:
            _fail(f"Unknown table format {fmt!r}")
        out = out or config['OUTPUT_FOLDER']
        jobs = jobs or config['JOBS']
        failed = False
        try:
            studies = load_presets(_preset_path(config_path), defaults=config)
            tau_exp = step_exponent(ref_tau) if ref_tau else None
            h_exp = step_exponent(ref_h) if ref_h else None
            for cfg in studies:
                if tau_exp is not None or h_exp is not None:
                    cfg = cfg.with_reference(tau_exp=tau_exp, h_exp=h_exp)
                current_app.logger.info(f"Study {cfg.stamp}: problem ({cfg.problem}), {cfg.coupling.value}, "
                                        f"reference {cfg.reference.label()}")
                tables = run_study(cfg, jobs=jobs)
                paths = emit_study(cfg, tables, fmt, out)
                if record:
                    record_tables(tables)
                    current_app.logger.info(f"Recorded {len(tables)} tables under {cfg.stamp}")
                violations = check_tables(cfg, tables) if check else []
                failed = failed or bool(violations)
                click.echo(render_text(STUDY_SUMMARY_TEMPLATE, stamp=cfg.stamp, problem=cfg.problem,
                                       tables=tables, paths=paths, violations=violations, checked=check), nl=False)
        except FracWaveError as exc:
            _fail(f"Study failed: {exc}")
        if failed:
            current_app.logger.warning("Observed orders outside the accepted range")
            sys.exit(2)

    @app.cli.command('oracle-check')
    @click.option('--alpha', 'alphas', type=float, multiple=True)
    @click.option('--ref-tau', default=None, help='Fine-grid step, e.g. 2^-16')
    def oracle_check(alphas, ref_tau):
        """Compare the three reference solutions at t = 1 on problems (a) and (b)."""
        try:
            tau_ref = parse_step(ref_tau) if ref_tau else 2.0 ** -current_app.config['ODE_REF_TAU_EXP']
            rows = []
            for problem in ('a', 'b'):
                for alpha in alphas or ORACLE_ALPHAS:
                    p = ODE_PROBLEMS[problem]
                    ml = exact_scalar(ExactEval(p, alpha), 1.0)
                    contour = exact_scalar(ExactEval(p, alpha, Method.CONTOUR), 1.0)
                    fine = fine_grid_reference(Scheme.ML1, p, alpha, tau_ref).final
                    row = {'problem': problem, 'alpha': alpha, 'ml': ml, 'contour': contour, 'fine': fine,
                           'ml_contour': abs(ml - contour), 'ml_fine': abs(ml - fine)}
                    row['ok'] = max(row['ml_contour'], row['ml_fine'], abs(contour - fine)) <= ORACLE_TOLERANCE
                    rows.append(row)
        except FracWaveError as exc:
            _fail(f"Oracle check failed: {exc}")
        click.echo(render_text(ORACLE_TEMPLATE, rows=rows), nl=False)
        if not all(row['ok'] for row in rows):
            _fail(f"Reference solutions disagree by more than {ORACLE_TOLERANCE:g}")

    @app.cli.command('kernel-certify')
    @click.option('--alpha', 'alphas', type=float, multiple=True)
    @click.option('--mu', 'mus', type=float, multiple=True)
    def kernel_certify(alphas, mus):
        """Kernel correction, transform limit, positivity and contour margins."""
        rows = []
        ok = True
        try:
            for alpha in alphas or CERTIFY_ALPHAS:
                margins = []
                for mu in mus or CERTIFY_MUS:
                    try:
                        spec = default_contour(alpha, mu)
                        margins.append(certify_denominator(alpha, mu, spec))
                    except CertificateError as exc:
                        current_app.logger.warning(f"{exc}")
                        margins.append(exc.certificate)
                row = {'alpha': alpha, 'correction': beta_correction(alpha),
                       'partial': correction_partial_sum(alpha),
                       'limit': abs(betahat_regular(alpha, 1e-10 + 0j)),
                       'positivity': certify_positivity(alpha), 'margins': margins}
                ok = ok and row['positivity'].certified and row['limit'] <= LIMIT_TOLERANCE
                ok = ok and all(cert.certified for cert in margins)
                rows.append(row)
        except FracWaveError as exc:
            _fail(f"Certification failed: {exc}")
        click.echo(render_text(CERTIFY_TEMPLATE, rows=rows), nl=False)
        if not ok:
            _fail("Some kernel certificates did not hold")

    @app.cli.command('ratio')
    @click.argument('alpha', type=float)
    @click.argument('tau')
    @click.argument('h')
    def ratio(alpha, tau, h):
        """tau^alpha/h^2 and the largest mu on the mesh."""
        try:
            report = ratio_diagnostic(Mesh1D.from_step(parse_step(h)), alpha, parse_step(tau))
        except FracWaveError as exc:
            _fail(f"Ratio diagnostic failed: {exc}")
        click.echo(render_text(RATIO_TEMPLATE, report=report), nl=False)

    @app.cli.command('history')
    @click.option('--stamp', default=None, help='Print the tables of one recorded run')
    def history(stamp):
        """List recorded runs."""
        if stamp is None:
            runs = StudyRun.query.order_by(StudyRun.created.desc(), StudyRun.id).all()
            click.echo(render_text(HISTORY_TEMPLATE, runs=runs), nl=False)
            return
        runs = StudyRun.query.filter_by(stamp=stamp).order_by(StudyRun.id).all()
        if not runs:
            _fail(f"No recorded run with stamp {stamp}")
        click.echo(render_markdown([run.to_table() for run in runs]), nl=False)
