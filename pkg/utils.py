import math
import re

from werkzeug.utils import secure_filename

from errors import ConfigurationError

TABLE_FORMATS = {'csv', 'md'}
STEP_PATTERN = re.compile(r'^\s*2\s*\^\s*\(?\s*(-?\d+)\s*\)?\s*$')


def allowed_file(filename, formats=TABLE_FORMATS):
    return '.' in filename and filename.rsplit('.', 1)[1].lower() in formats


def table_filename(stamp, problem, scheme, alpha, suffix):
    return secure_filename(f'{stamp}_problem_{problem}_{scheme}_alpha_{alpha:g}.{suffix}')


def study_filename(stamp, problem, suffix):
    return secure_filename(f'{stamp}_problem_{problem}.{suffix}')


def parse_step(text):
    """'2^-10' or a plain decimal."""
    match = STEP_PATTERN.match(str(text))
    if match:
        return 2.0 ** int(match.group(1))
    try:
        step = float(text)
    except ValueError:
        raise ConfigurationError(f"cannot read step size {text!r}") from None
    if step <= 0:
        raise ConfigurationError(f"step size must be positive, got {text!r}")
    return step


def step_label(step):
    exponent = math.log2(step)
    if exponent == round(exponent):
        return f'2^{int(round(exponent))}'
    return f'{step:g}'


def step_ratio(coarse, fine):
    """Integer number of fine steps per coarse step."""
    ratio = coarse / fine
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * max(1.0, ratio):
        raise ConfigurationError(f"step {fine} does not nest into {coarse}")
    return k


def power_of_two_floor(x):
    """Largest power of two not above x."""
    if x <= 0:
        raise ConfigurationError(f"cannot round {x} to a power of two")
    return 2.0 ** math.floor(math.log2(x) + 1e-12)


def step_exponent(text):
    """k for a step of 2^-k."""
    exponent = -math.log2(parse_step(text))
    if exponent != round(exponent):
        raise ConfigurationError(f"step {text!r} is not a power of two")
    return int(round(exponent))
