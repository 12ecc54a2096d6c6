MARKDOWN_TEMPLATE = '''# {{ title }}

Run {{ stamp }}, coupling {{ coupling }}, reference {{ reference }}

| {{ resolution_name }} |{% for column in columns %} {{ column }} Error | Order |{% endfor %}

|---|{% for column in columns %}---|---|{% endfor %}

{% for row in rows %}
| {{ row.label }} |{% for cell in row.cells %} {{ cell.error }} | {{ cell.order }} |{% endfor %}

{% endfor %}
'''

STUDY_SUMMARY_TEMPLATE = '''Study {{ stamp }}: problem ({{ problem }}), {{ tables|length }} tables
{% for path in paths %}
  wrote {{ path }}
{% endfor %}
{% if violations %}
Check failed:
{% for item in violations %}
  - {{ item }}
{% endfor %}
{% elif checked %}
Check passed.
{% endif %}
'''

ORACLE_TEMPLATE = '''{% for row in rows %}
problem ({{ row.problem }}) alpha={{ row.alpha }}: ML={{ '%.12e'|format(row.ml) }} contour={{ '%.12e'|format(row.contour) }} fine={{ '%.12e'|format(row.fine) }}
    |ML-contour|={{ '%.2e'|format(row.ml_contour) }} |ML-fine|={{ '%.2e'|format(row.ml_fine) }}{% if not row.ok %} FAIL{% endif %}

{% endfor %}
'''

CERTIFY_TEMPLATE = '''{% for row in rows %}
alpha={{ row.alpha }}: beta1-b1={{ '%.10f'|format(row.correction) }} (partial sums {{ '%.10f'|format(row.partial) }}), |betahat_reg(0)|={{ '%.1e'|format(row.limit) }}
    min Im quotient={{ '%.3e'|format(row.positivity.min_quotient) }} max Re bhat(iy)={{ '%.3e'|format(row.positivity.max_cosine_series) }} min Re beta-form={{ '%.3e'|format(row.positivity.min_re_beta) }}
{% for cert in row.margins %}
    mu={{ cert.mu }} theta={{ '%.4f'|format(cert.theta) }} margin={{ '%.3e'|format(cert.margin) }}{% if not cert.certified %} NOT CERTIFIED{% endif %}

{% endfor %}
{% endfor %}
'''

RATIO_TEMPLATE = '''tau^alpha/h^2 = {{ '%.6g'|format(report.ratio) }}
lambda_max = {{ '%.6g'|format(report.lambda_max) }}
mu_max = {{ '%.6g'|format(report.mu_max) }}
{% if report.warning %}
warning: the ratio exceeds 1, accuracy may deteriorate
{% endif %}
'''

HISTORY_TEMPLATE = '''{% for run in runs %}
{{ run.stamp }}  problem ({{ run.problem }})  {{ run.scheme }}  alpha={{ run.alpha }}  {{ run.coupling }}  {{ run.rows|length }} rows  {{ run.created.strftime('%Y-%m-%d %H:%M') }}
{% else %}
No recorded runs.
{% endfor %}
'''
