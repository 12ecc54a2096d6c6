import functools

import pytest
from app import create_app
from kernels import build_kernels
from models import db


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the full table reproductions')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def app(tmp_path):
    app = create_app({
        'TESTING': True,
        'SQLALCHEMY_DATABASE_URI': 'sqlite:///:memory:',
        'OUTPUT_FOLDER': str(tmp_path / 'tables'),
    })

    with app.app_context():
        db.create_all()
        yield app
        db.session.remove()
        db.drop_all()
        if hasattr(db, 'engine'):
            db.engine.dispose()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@functools.lru_cache(maxsize=None)
def _kernels(alpha, n):
    return build_kernels(alpha, n)


@pytest.fixture
def kernels():
    """Cached KernelTable factory shared across tests."""
    return _kernels
