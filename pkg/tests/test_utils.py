import pytest

from errors import ConfigurationError
from utils import (allowed_file, parse_step, power_of_two_floor, step_exponent, step_label, step_ratio,
                   study_filename, table_filename)


def test_allowed_file_valid():
    assert allowed_file('table.csv') == True
    assert allowed_file('table.MD') == True
    assert allowed_file('study.json', {'json'}) == True


def test_allowed_file_invalid():
    assert allowed_file('table.xlsx') == False
    assert allowed_file('csv') == False
    assert allowed_file('') == False


def test_filenames():
    assert table_filename('abc', 'd', 'ML1', 1.8, 'csv') == 'abc_problem_d_ML1_alpha_1.8.csv'
    assert study_filename('abc', 'f', 'md') == 'abc_problem_f.md'
    assert '/' not in table_filename('../x', 'a', 'L1', 1.2, 'csv')


def test_parse_step():
    assert parse_step('2^-10') == 2 ** -10
    assert parse_step('2^(-3)') == 0.125
    assert parse_step(' 2 ^ -4 ') == 0.0625
    assert parse_step('0.25') == 0.25
    with pytest.raises(ConfigurationError):
        parse_step('tiny')
    with pytest.raises(ConfigurationError):
        parse_step('-0.1')


def test_step_label():
    assert step_label(2 ** -7) == '2^-7'
    assert step_label(0.3) == '0.3'


def test_step_ratio():
    assert step_ratio(2 ** -4, 2 ** -10) == 64
    assert step_ratio(1.0, 0.1) == 10
    with pytest.raises(ConfigurationError):
        step_ratio(0.1, 0.03)
    with pytest.raises(ConfigurationError):
        step_ratio(2 ** -10, 2 ** -4)


def test_power_of_two_floor():
    assert power_of_two_floor(2 ** -5) == 2 ** -5
    assert power_of_two_floor(0.3) == 0.25
    assert power_of_two_floor((2 ** -5) ** (2 / 1.2)) == 2 ** -9
    with pytest.raises(ConfigurationError):
        power_of_two_floor(0.0)


def test_step_exponent():
    assert step_exponent('2^-16') == 16
    assert step_exponent('0.125') == 3
    with pytest.raises(ConfigurationError):
        step_exponent('0.3')
