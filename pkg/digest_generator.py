"""
Run digest generator for verification, simulation and lifespan results.
"""

import logging
import os

from jinja2 import Template

logger = logging.getLogger(__name__)


class DigestGenerator:
    """
    Renders HTML and plain-text digests of one run.
    """

    def __init__(self):
        """
        Initialize the digest generator.
        """
        self.html_template = """
        <!DOCTYPE html>
        <html>
        <head>
            <meta charset="UTF-8">
            <title>{{ title }}</title>
            <style>
                body {
                    font-family: Arial, sans-serif;
                    line-height: 1.5;
                    color: #333;
                    max-width: 960px;
                    margin: 0 auto;
                    padding: 20px;
                }
                .header {
                    background-color: #f5f5f5;
                    padding: 15px;
                    border-radius: 5px;
                    margin-bottom: 20px;
                }
                .section-title {
                    font-size: 18px;
                    font-weight: bold;
                    border-bottom: 1px solid #ddd;
                    padding-bottom: 5px;
                }
                table {
                    border-collapse: collapse;
                    width: 100%;
                    font-size: 13px;
                }
                th, td {
                    border: 1px solid #ddd;
                    padding: 4px 8px;
                    text-align: right;
                }
                .status-pass {
                    border-left: 5px solid #66cc66;
                }
                .status-warn {
                    border-left: 5px solid #ffcc00;
                }
                .status-fail {
                    border-left: 5px solid #ff4d4d;
                }
                .footer {
                    text-align: center;
                    font-size: 12px;
                    color: #999;
                    margin-top: 30px;
                }
            </style>
        </head>
        <body>
            <div class="header">
                <h1>{{ title }}</h1>
                <p>Run {{ run_id }} &middot; seed {{ seed }}</p>
                <p>Overall: <strong>{{ 'PASSED' if passed else 'FAILED' }}</strong></p>
            </div>

            {% if reports %}
            <div class="section">
                <h2 class="section-title">Inequality checks</h2>
                <table>
                    <tr><th>id</th><th>samples</th><th>max ratio</th><th>normalized</th>
                        <th>slope</th><th>ceiling</th><th>status</th></tr>
                    {% for r in reports %}
                    <tr class="status-{{ r.status }}">
                        <td>{{ r.id }}</td><td>{{ r.sample_count }}</td>
                        <td>{{ '%.4e'|format(r.max_ratio) }}</td><td>{{ '%.4f'|format(r.normalized_constant) }}</td>
                        <td>{{ '%+.3f'|format(r.trend_slope) }}</td><td>{{ '%.4g'|format(r.ceiling) }}</td>
                        <td>{{ r.status }}</td>
                    </tr>
                    {% endfor %}
                </table>
            </div>
            {% endif %}

            {% if certificates %}
            <div class="section">
                <h2 class="section-title">Energy certificates</h2>
                <table>
                    <tr><th>certificate</th><th>constant</th><th>pinned</th><th>required</th>
                        <th>min margin</th><th>status</th></tr>
                    {% for c in certificates %}
                    <tr class="status-{{ c.status }}">
                        <td>{{ c.which }}</td><td>{{ c.constant_name }}</td>
                        <td>{{ '%.4g'|format(c.constant) }}</td><td>{{ '%.4g'|format(c.required_constant) }}</td>
                        <td>{{ '%.3e'|format(c.min_margin) }}</td><td>{{ c.status }}</td>
                    </tr>
                    {% endfor %}
                </table>
            </div>
            {% endif %}

            {% if cells %}
            <div class="section">
                <h2 class="section-title">Lifespan scan</h2>
                <table>
                    <tr><th>eps</th><th>s1</th><th>T_good</th><th>horizon</th><th>escape</th>
                        <th>tail</th><th>status</th></tr>
                    {% for c in cells %}
                    <tr class="status-{{ c.status }}">
                        <td>{{ c.eps }}</td><td>{{ c.s1 }}</td><td>{{ c.t_good }}</td>
                        <td>{{ c.horizon }}</td><td>{{ c.escape }}</td><td>{{ c.tail }}</td>
                        <td>{{ c.outcome }}</td>
                    </tr>
                    {% endfor %}
                </table>
            </div>
            {% endif %}

            {% if notes %}
            <div class="section">
                <h2 class="section-title">Notes</h2>
                <ul>
                    {% for note in notes %}
                    <li>{{ note }}</li>
                    {% endfor %}
                </ul>
            </div>
            {% endif %}

            <div class="footer">
                <p>Generated by nls-lab</p>
            </div>
        </body>
        </html>
        """

    def _status(self, passed, warned=False):
        """
        Map an outcome to a status label.

        Args:
            passed (bool): Whether the check passed
            warned (bool): Whether a tolerated anomaly was recorded

        Returns:
            str: 'pass', 'warn' or 'fail'
        """
        if not passed:
            return 'fail'
        return 'warn' if warned else 'pass'

    def _context(self, title, run_id, seed, reports, certificates, table, notes):
        reports = [
            {'id': r.id, 'sample_count': r.sample_count, 'max_ratio': r.max_ratio,
             'normalized_constant': r.normalized_constant, 'trend_slope': r.trend_slope,
             'ceiling': r.ceiling, 'status': self._status(r.passed)}
            for r in (reports or [])
        ]
        certificates = [
            dict(c.summary(), status=self._status(True, warned=not c.holds))
            for c in (certificates or [])
        ]
        cells = []
        for c in (table.cells if table is not None else []):
            feasible = c.feasible
            cells.append({
                'eps': f"{c.eps:g}", 's1': f"{c.s1:g}",
                't_good': f"{c.t_good:.6g}" if feasible else '-',
                'horizon': f"{c.horizon:.6g}" if feasible else '-',
                'escape': f"{c.escape_time:.6g}" if c.escape_time is not None else 'none',
                'tail': f"{c.tail_fraction_max:.2e}",
                'outcome': c.status,
                'status': self._status(c.passed, warned=c.tail_flag) if feasible else 'warn',
            })
        passed = (all(r['status'] != 'fail' for r in reports)
                  and all(c['status'] != 'fail' for c in cells))
        return {
            'title': title, 'run_id': run_id, 'seed': seed, 'passed': passed,
            'reports': reports, 'certificates': certificates, 'cells': cells,
            'notes': list(notes or []),
        }

    def generate_digest(self, title, run_id='', seed=None, reports=None, certificates=None,
                        table=None, notes=None):
        """
        Generate an HTML digest.

        Args:
            title (str): Heading
            run_id (str): Content hash of the run
            seed (int): Master seed
            reports (list): RatioReport objects
            certificates (list): CertificateSeries objects
            table (LifespanTable): Lifespan scan
            notes (list): Free-form lines

        Returns:
            str: HTML digest
        """
        context = self._context(title, run_id, seed, reports, certificates, table, notes)
        return Template(self.html_template).render(**context)

    def generate_text_digest(self, title, run_id='', seed=None, reports=None, certificates=None,
                             table=None, notes=None):
        """
        Generate a plain text digest with the same content as generate_digest.

        Returns:
            str: Plain text digest
        """
        context = self._context(title, run_id, seed, reports, certificates, table, notes)

        text_digest = f"{title.upper()}\nRun {run_id} seed {seed}\n"
        text_digest += f"Overall: {'PASSED' if context['passed'] else 'FAILED'}\n\n"

        if context['reports']:
            text_digest += "INEQUALITY CHECKS\n"
            text_digest += "=================\n\n"
            for r in context['reports']:
                text_digest += (f"{r['id']:<8} max ratio {r['max_ratio']:.4e}  "
                                f"normalized {r['normalized_constant']:.4f}  "
                                f"slope {r['trend_slope']:+.3f}  {r['status'].upper()}\n")
            text_digest += "\n"

        if context['certificates']:
            text_digest += "ENERGY CERTIFICATES\n"
            text_digest += "===================\n\n"
            for c in context['certificates']:
                text_digest += (f"{c['which']:<12} {c['constant_name']} pinned {c['constant']:.4g} "
                                f"required {c['required_constant']:.4g}  "
                                f"min margin {c['min_margin']:.3e}  {c['status'].upper()}\n")
            text_digest += "\n"

        if context['cells']:
            text_digest += "LIFESPAN SCAN\n"
            text_digest += "=============\n\n"
            for c in context['cells']:
                text_digest += (f"eps={c['eps']} s1={c['s1']} T_good={c['t_good']} "
                                f"escape={c['escape']} tail={c['tail']} {c['outcome']}\n")
            text_digest += "\n"

        for note in context['notes']:
            text_digest += f"- {note}\n"

        text_digest += "Generated by nls-lab"
        return text_digest

    def write_digest(self, out_dir, stem, **kwargs):
        """
        Write <stem>.html and <stem>.txt into out_dir.

        Returns:
            list: Paths written
        """
        html_path = os.path.join(out_dir, f"{stem}.html")
        text_path = os.path.join(out_dir, f"{stem}.txt")
        with open(html_path, 'w') as f:
            f.write(self.generate_digest(**kwargs))
        with open(text_path, 'w') as f:
            f.write(self.generate_text_digest(**kwargs))
        logger.info("digest written to %s", html_path)
        return [html_path, text_path]
