import os


class Config:
    SQLALCHEMY_DATABASE_URI = os.environ.get('FRACWAVE_DATABASE_URL', 'sqlite:///studies.db')
    SQLALCHEMY_TRACK_MODIFICATIONS = False
    OUTPUT_FOLDER = os.environ.get('FRACWAVE_OUTPUT', 'tables')
    PRESET_FOLDER = os.environ.get('FRACWAVE_PRESETS', 'presets')
    TABLE_FORMAT = os.environ.get('FRACWAVE_FORMAT', 'csv')
    ALLOWED_FORMATS = {'csv', 'md'}

    # Desk-scale references, step = 2^-exp
    ODE_REF_TAU_EXP = int(os.environ.get('ODE_REF_TAU_EXP', 16))
    PDE_REF_H_EXP = int(os.environ.get('PDE_REF_H_EXP', 9))
    PDE_REF_TAU_EXP = int(os.environ.get('PDE_REF_TAU_EXP', 12))

    JOBS = int(os.environ.get('FRACWAVE_JOBS', 1))
    LOG_LEVEL = os.environ.get('FRACWAVE_LOG_LEVEL', 'INFO')
