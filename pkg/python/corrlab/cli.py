#!/usr/bin/env python
'''
corrlab command line front end.

    corrlab analyze  <matrix>           membership, extremality, exposedness, locality, self-test
    corrlab generate [--count --seed --out]
    corrlab batch    <records> [--mode extremality|exposedness --jobs N]
    corrlab support  <functional>       maximum of sum L_xy c_xy over quantum correlators
    corrlab complete <matrix> [--theta34 angle]

Reports go to stdout (``--format text`` or ``--format machine``, one JSON
record per line), diagnostics to stderr or the log file.

Exit codes: 0 success, 2 usage or parse error, 3 not a member, 4 solver
failure, 5 I/O error.
'''

__license__ = "GPL"
__version__ = "1.0.0"
__status__ = "Production"

import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from optparse import OptionParser

import numpy as np

from .completion import (as_correlator, chordal_completion_2x2, completion_interval_2x2,
                         find_completion, partial_matrix)
from .errors import CorrlabError, NotAMember, NumericalFailure, ParseError
from .geometry import (EXTREME, LOCAL_ENUMERATION_LIMIT, extremality_from_completion, is_exposed,
                       is_extreme, is_local, membership_analytic, normalized_hyperplane,
                       self_tests_singlet_2x2, support_value)
from .linalg import Tolerances
from .models import random_extremal_stream
from .utils import (LOG_FORMAT, ContextFilter, client_context, dumps_machine, evaluate,
                    format_text, read_records, resolve_matrix, write_json_records,
                    write_netcdf)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_MEMBER = 3
EXIT_SOLVER = 4
EXIT_IO = 5

COMMANDS = ('analyze', 'generate', 'batch', 'support', 'complete')

SUMMARY_KEYS = {
    'extremality': ('Extreme', 'NotExtreme', 'Inconclusive'),
    'exposedness': ('Exposed', 'Unknown', 'NotApplicable'),
}
FAILURE_KEYS = ('NotMember', 'SolverFailure', 'Malformed')


def evaluate_instance(job):
    '''
    Batch worker: verdict for one correlator.

    Parameters
    ----------
    job : (C, mode, tol)

    Returns
    -------
    dict with at least a ``verdict`` key
    '''
    C, mode, tol = job
    try:
        verdict = is_extreme(C, tol)
        if mode == 'extremality':
            res = verdict.evidence
            return {'verdict': verdict.status, 'reason': verdict.reason,
                    'rank_completion': res.rank_completion, 'rank_dual': res.rank_dual,
                    'null_dim': res.null_dim}
        if verdict.status != EXTREME:
            return {'verdict': 'NotApplicable', 'extremality': verdict.status}
        exp = is_exposed(C, tol, extremality=verdict)
        L, offset = normalized_hyperplane(exp.hyperplane, exp.offset)
        return {'verdict': exp.status, 'null_dim': exp.null_dim, 'hyperplane': L,
                'offset': offset}
    except NotAMember as e:
        return {'verdict': 'NotMember', 'error': str(e)}
    except NumericalFailure as e:
        return {'verdict': 'SolverFailure', 'error': str(e)}
    except CorrlabError as e:
        return {'verdict': 'Malformed', 'error': str(e)}


class Corrlab(object):
    '''
    One corrlab invocation: settings, tolerances, logging and the commands.

    Parameters
    ----------
    inputs : optparse values (from processArgs), a dict with the same keys,
        or None for defaults
    '''

    def __init__(self, inputs=None):
        self.default_settings(inputs)
        self.d = client_context()
        self.set_logging(self.logdir, self.logfile)
        self.tol = self.tolerances()
        self.timings = {}

    def default_settings(self, inputs):
        defaults, _ = processArgs([])
        self.ip = inputs
        if inputs is None:
            src = vars(defaults)
        elif isinstance(inputs, dict):
            src = dict(vars(defaults), **inputs)
        else:
            src = dict(vars(defaults), **vars(inputs))
        self.format = src['format'] or 'text'
        self.seed = src['seed']
        self.count = src['count']
        self.mode = src['mode'] or 'extremality'
        self.method = src['method'] or 'both'
        self.jobs = src['jobs'] or 1
        self.out = src['out']
        self.theta34 = None if src['theta34'] is None else evaluate(src['theta34'])
        self.profile = src['profile']
        self.rank_tol = src['rank_tol']
        self.tight_tol = src['tight_tol']
        self.gap_tol = src['gap_tol']
        self.logfile = src['logfile']
        self.logdir = src['logdir'] or 'logs'
        self.verbose = src['verbose']

    def tolerances(self):
        base = Tolerances.from_profile(self.profile) if self.profile else Tolerances.from_env()
        return base.replace(rank_rel=self.rank_tol, tight_abs=self.tight_tol, sdp_gap=self.gap_tol)

    def set_logging(self, logdir, logfile):
        '''
        log to logdir/logfile when a log file is named, otherwise to stderr
        '''
        root = logging.getLogger('corrlab')
        for h in [h for h in root.handlers if getattr(h, 'corrlab', False)]:
            root.removeHandler(h)
            h.close()
        if logfile:
            if not os.path.exists(logdir):
                os.makedirs(logdir)
            self.log = os.path.join(logdir, logfile)
            handler = logging.FileHandler(self.log, mode='w+')
            level = logging.DEBUG
        else:
            self.log = None
            handler = logging.StreamHandler(sys.stderr)
            level = logging.INFO if self.verbose else logging.WARNING
        handler.corrlab = True
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler.addFilter(ContextFilter(self.d))
        root.addHandler(handler)
        root.setLevel(level)
        logger.info('__version__ %s', __version__, extra=self.d)
        if self.log:
            sys.stderr.write('logging to %s\n' % self.log)

    def _timed(self, stage, func, *args, **kw):
        t0 = time.perf_counter()
        try:
            return func(*args, **kw)
        finally:
            self.timings[stage] = time.perf_counter() - t0

    def analyze(self, C):
        '''
        Run the decision pipeline on one correlator.

        Returns
        -------
        (report, exit code)
        '''
        tol = self.tol
        C = as_correlator(C)
        n, m = C.shape
        self.timings = {}
        report = {'input': {'n': n, 'm': m, 'c': C}, 'tolerances': tol.as_dict()}
        membership = {'method': self.method}
        analytic = None
        if self.method == 'analytic' or (self.method == 'both' and min(n, m) <= 2):
            analytic = self._timed('membership_analytic', membership_analytic, C, tol)
            membership['analytic'] = analytic.member
            membership['violated'] = [c.describe() for c in analytic.violated]
            membership['tight'] = [c.describe() for c in analytic.tight]
        res = None
        if self.method != 'analytic' or analytic.member:
            res = self._timed('membership_sdp', find_completion, C, tol)
            membership['sdp'] = res.member
            membership['margin'] = res.margin
            membership['boundary'] = res.boundary
        member = res.member if res is not None else analytic.member
        if analytic is not None and res is not None and analytic.member != res.member:
            logger.warning('analytic and SDP membership disagree (margin %.3e)', res.margin,
                           extra=self.d)
        membership['verdict'] = 'member' if member else 'not_member'
        report['membership'] = membership
        if not member:
            if res is not None:
                membership['separating_inequality'] = {'coefficients': -res.lam_xy,
                                                       'bound': float(res.lam_i.sum())}
            report['timings'] = self.timings
            return report, EXIT_NOT_MEMBER

        verdict = extremality_from_completion(res, tol)
        report['extremality'] = {
            'status': verdict.status, 'reason': verdict.reason, 'unique': res.unique,
            'strict_complementarity': verdict.strict_complementarity,
            'representative': res.representative, 'rank_C': res.rank_C,
            'rank_completion': res.rank_completion, 'rank_hadamard': res.rank_hadamard,
            'rank_dual': res.rank_dual, 'null_dim': res.null_dim,
            'completion': res.completion, 'dual_certificate': res.dual_certificate,
            'lam_i': res.lam_i, 'lam_xy': res.lam_xy}

        if verdict.status == EXTREME:
            exp = self._timed('exposedness', is_exposed, C, tol, extremality=verdict)
            L, offset = normalized_hyperplane(exp.hyperplane, exp.offset)
            report['exposedness'] = {'status': exp.status, 'null_dim': exp.null_dim,
                                     'hyperplane': exp.hyperplane, 'offset': exp.offset,
                                     'normalized_hyperplane': L, 'normalized_offset': offset}
        else:
            report['exposedness'] = {'status': 'NotApplicable'}

        if n + m <= LOCAL_ENUMERATION_LIMIT:
            loc = self._timed('locality', is_local, C, tol)
            report['locality'] = {'local': loc.local,
                                  'strategies_used': 0 if loc.weights is None
                                  else int(np.sum(loc.weights > 1e-12))}
        else:
            report['locality'] = {'local': 'skipped'}
        if (n, m) == (2, 2):
            report['self_test'] = self_tests_singlet_2x2(C, tol, extremality=verdict)
        report['timings'] = self.timings
        return report, EXIT_OK

    def generate(self):
        '''seeded extremal 2 x 2 correlators as (C, thetas) pairs'''
        return random_extremal_stream(self.seed, self.count, self.tol)

    def batch(self, records):
        '''
        Verdicts for a list of Record, in input order.

        Returns
        -------
        (per-record result dicts, summary counts, exit code)
        '''
        keys = SUMMARY_KEYS[self.mode]
        summary = dict.fromkeys(keys + FAILURE_KEYS, 0)
        jobs = [(r.C, self.mode, self.tol) for r in records if r.C is not None]
        if self.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                verdicts = list(pool.map(evaluate_instance, jobs))
        else:
            verdicts = [evaluate_instance(j) for j in jobs]
        verdicts = iter(verdicts)
        results = []
        for r in records:
            if r.C is None:
                out = {'verdict': 'Malformed', 'error': r.error}
            else:
                out = next(verdicts)
            out['record'] = r.index
            if out['verdict'] == 'Inconclusive':
                logger.warning('record %d inconclusive', r.index, extra=self.d)
            summary[out['verdict']] = summary.get(out['verdict'], 0) + 1
            results.append(out)
        summary['total'] = len(records)
        logger.info('batch summary %s', summary, extra=self.d)
        return results, summary, EXIT_SOLVER if summary['SolverFailure'] else EXIT_OK

    def support(self, L):
        res = self._timed('support', support_value, L, self.tol)
        return {'functional': np.atleast_2d(L), 'value': res.value, 'argmax': res.argmax}

    def complete(self, C):
        C = as_correlator(C)
        n, m = C.shape
        res = find_completion(C, self.tol)
        report = {'partial_matrix': partial_matrix(C), 'member': res.member,
                  'margin': res.margin}
        if res.member:
            report['completion'] = res.completion
            report['representative'] = res.representative
            report['unique'] = res.unique
        if (n, m) == (2, 2):
            interval = completion_interval_2x2(C, self.tol)
            report['interval_theta34'] = 'empty' if interval is None else list(interval)
            if interval is not None and self.theta34 is not None:
                report['chordal_completion'] = chordal_completion_2x2(C, self.theta34)
        return report, EXIT_OK if res.member else EXIT_NOT_MEMBER

    def emit(self, report, out):
        if self.format == 'machine':
            out.write(dumps_machine(report) + '\n')
        else:
            out.write('\n'.join(format_text(report)) + '\n')


def processArgs(args=None, parser=None):
    usage = 'usage: %prog <' + '|'.join(COMMANDS) + '> [options] [input]'
    args = sys.argv[1:] if args is None else args
    parser = parser or OptionParser(usage=usage)

    parser.add_option('--format', dest='format', type='choice', choices=['text', 'machine'],
                      default='text', help="report format: text or machine (default: text)")
    parser.add_option('--seed', dest='seed', type='int', default=0,
                      help="generator seed (default: 0)")
    parser.add_option('--count', dest='count', type='int', default=1000,
                      help="number of correlators to generate (default: 1000)")
    parser.add_option('--mode', dest='mode', type='choice',
                      choices=['extremality', 'exposedness'], default='extremality',
                      help="batch mode: extremality or exposedness (default: extremality)")
    parser.add_option('--method', dest='method', type='choice',
                      choices=['analytic', 'sdp', 'both'], default='both',
                      help="membership method: analytic, sdp or both (default: both)")
    parser.add_option('--jobs', dest='jobs', type='int', default=1,
                      help="worker processes for batch (default: 1)")
    parser.add_option('--out', dest='out', type='string', default=None,
                      help="output file for generate; .nc writes netCDF (default: stdout)")
    parser.add_option('--theta34', dest='theta34', type='string', default=None,
                      help="angle of the second party's entry for complete, e.g. pi/2")
    parser.add_option('--profile', dest='profile', type='string', default=None,
                      help="tolerance profile default or strict (default: $CORRLAB_TOL_PROFILE)")
    parser.add_option('--rank-tol', dest='rank_tol', type='float', default=None,
                      help="relative eigenvalue threshold for numerical rank")
    parser.add_option('--tight-tol', dest='tight_tol', type='float', default=None,
                      help="absolute tightness threshold in angle space")
    parser.add_option('--gap-tol', dest='gap_tol', type='float', default=None,
                      help="relative duality gap target of the SDP solver")
    parser.add_option('--logfile', dest='logfile', type='string', default=None,
                      help="set log file name (default: log to stderr)")
    parser.add_option('--logdir', dest='logdir', type='string', default='logs',
                      help="set log directory name (default: logs)")
    parser.add_option('--verbose', dest='verbose', action='store_true', default=False,
                      help="log verdict-level events to stderr")

    return parser.parse_args(args)


def _one_input(rest, cmd):
    if len(rest) != 1:
        raise ParseError('%s takes exactly one input, got %d' % (cmd, len(rest)))
    return rest[0]


def cmd_analyze(runner, source, out):
    report, code = runner.analyze(resolve_matrix(source))
    runner.emit(report, out)
    return code


def cmd_generate(runner, out):
    if runner.count < 1:
        raise ParseError('--count must be at least 1')
    records = runner.generate()
    if runner.out and runner.out.endswith('.nc'):
        write_netcdf(runner.out, records, seed=runner.seed,
                     description='extremal 2 x 2 correlators from three uniform angles')
    elif runner.out:
        with open(runner.out, 'w') as f:
            write_json_records(f, records)
    else:
        write_json_records(out, records)
    return EXIT_OK


def cmd_batch(runner, path, out):
    results, summary, code = runner.batch(read_records(path))
    if runner.format == 'machine':
        for r in results:
            out.write(dumps_machine(r) + '\n')
        out.write(dumps_machine({'summary': summary}) + '\n')
    else:
        for r in results:
            line = 'record %d: %s' % (r['record'], r['verdict'])
            if 'reason' in r:
                line += ' (%s)' % r['reason']
            out.write(line + '\n')
        out.write('\n'.join(format_text({'summary': summary})) + '\n')
    return code


def cmd_support(runner, source, out):
    L = resolve_matrix(source)
    runner.emit(runner.support(L), out)
    return EXIT_OK


def cmd_complete(runner, source, out):
    report, code = runner.complete(resolve_matrix(source))
    runner.emit(report, out)
    return code


def main(argv=None, out=None):
    out = out or sys.stdout
    opts, rest = processArgs(argv)
    if not rest or rest[0] not in COMMANDS:
        sys.stderr.write('corrlab: expected one of %s\n' % ', '.join(COMMANDS))
        return EXIT_USAGE
    cmd, rest = rest[0], rest[1:]
    try:
        runner = Corrlab(opts)
        if cmd == 'generate':
            return cmd_generate(runner, out)
        source = _one_input(rest, cmd)
        if cmd == 'analyze':
            return cmd_analyze(runner, source, out)
        if cmd == 'batch':
            return cmd_batch(runner, source, out)
        if cmd == 'support':
            return cmd_support(runner, source, out)
        return cmd_complete(runner, source, out)
    except NumericalFailure as e:
        sys.stderr.write('corrlab: solver failure: %s\n' % e)
        return EXIT_SOLVER
    except (CorrlabError, ValueError) as e:
        sys.stderr.write('corrlab: %s\n' % e)
        return EXIT_USAGE
    except (IOError, OSError) as e:
        sys.stderr.write('corrlab: I/O error: %s\n' % e)
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
