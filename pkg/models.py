from datetime import datetime, timezone

from flask_sqlalchemy import SQLAlchemy

db = SQLAlchemy()


class StudyRun(db.Model):
    id = db.Column(db.Integer, primary_key=True)
    stamp = db.Column(db.String(12), nullable=False, index=True)
    problem = db.Column(db.String(1), nullable=False)
    coupling = db.Column(db.String(16), nullable=False)
    alpha = db.Column(db.Float, nullable=False)
    scheme = db.Column(db.String(8), nullable=False)
    reference = db.Column(db.String(80), nullable=False)
    resolution = db.Column(db.String(8), nullable=False, default='tau')
    created = db.Column(db.DateTime, default=lambda: datetime.now(timezone.utc))
    rows = db.relationship('StudyRow', backref='run', lazy=True, cascade='all, delete-orphan',
                           order_by='StudyRow.position')
    __table_args__ = (db.UniqueConstraint('stamp', 'alpha', 'scheme', name='unique_study_table'),)

    def __repr__(self):
        return f'<StudyRun {self.stamp} ({self.problem}) {self.scheme} alpha={self.alpha}>'

    @property
    def orders(self):
        return [row.order for row in self.rows[1:]]

    @classmethod
    def from_table(cls, table):
        meta = table.metadata
        run = cls(stamp=meta['stamp'], problem=meta['problem'], coupling=meta['coupling'],
                  alpha=meta['alpha'], scheme=meta['scheme'], reference=meta['reference'],
                  resolution=meta.get('resolution', 'tau'))
        run.rows = [StudyRow(position=i, resolution=row.resolution, error=row.error, order=row.order)
                    for i, row in enumerate(table.rows)]
        return run

    def to_table(self):
        from experiments import ConvergenceTable, Row
        rows = [Row(r.resolution, r.error, r.order, r.position > 0 and r.order is None) for r in self.rows]
        meta = {'stamp': self.stamp, 'problem': self.problem, 'coupling': self.coupling, 'alpha': self.alpha,
                'scheme': self.scheme, 'reference': self.reference, 'resolution': self.resolution}
        return ConvergenceTable(rows, meta)


class StudyRow(db.Model):
    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey('study_run.id'), nullable=False)
    position = db.Column(db.Integer, nullable=False)
    resolution = db.Column(db.String(32), nullable=False)
    error = db.Column(db.Float, nullable=False)
    order = db.Column(db.Float)


def record_tables(tables):
    """Store a study's tables, replacing any earlier run with the same stamp."""
    stamps = {table.metadata['stamp'] for table in tables}
    for run in StudyRun.query.filter(StudyRun.stamp.in_(stamps)).all():
        db.session.delete(run)
    db.session.flush()
    runs = [StudyRun.from_table(table) for table in tables]
    db.session.add_all(runs)
    db.session.commit()
    return runs
