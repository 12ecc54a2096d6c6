from dotenv import load_dotenv  # Load first
load_dotenv()  # Before Config reads the environment

import logging

from flask import Flask
from flask.cli import FlaskGroup

from commands import register_commands
from config import Config
from models import db


def create_app(test_config=None):
    app = Flask(__name__)
    app.config.from_object(Config)
    if test_config:
        app.config.update(test_config)

    level = app.config['LOG_LEVEL'].upper()
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    app.logger.setLevel(level)

    db.init_app(app)
    register_commands(app)

    with app.app_context():
        db.create_all()

    return app


cli = FlaskGroup(create_app=create_app)

if __name__ == '__main__':
    cli()
