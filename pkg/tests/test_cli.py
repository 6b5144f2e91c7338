import io
import json
import logging

import numpy as np
import pytest

from corrlab.cli import Corrlab, main, processArgs
from corrlab.errors import ParseError
from corrlab.utils import (Record, evaluate, parse_inline, read_json_records, read_records,
                           resolve_matrix, write_json_records, write_netcdf)

R2 = np.sqrt(2.0)


@pytest.fixture(autouse=True)
def _reset_logging():
    yield
    root = logging.getLogger('corrlab')
    for h in list(root.handlers):
        if getattr(h, 'corrlab', False):
            root.removeHandler(h)
            h.close()
    root.setLevel(logging.NOTSET)


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def machine(*argv):
    code, text = run(*(argv + ('--format', 'machine')))
    return code, [json.loads(line) for line in text.splitlines() if line.strip()]


def test_evaluate_expressions():
    assert evaluate('1/sqrt(2)') == 1 / np.sqrt(2)
    assert np.isclose(evaluate('cos(pi/8)'), np.cos(np.pi / 8))
    assert evaluate('-2**-1') == -0.5
    for bad in ("__import__('os')", '1/0', 'x + 1', 'sqrt(2, 3)', 'log(0)'):
        with pytest.raises(ParseError):
            evaluate(bad)


def test_inline_matrices(chsh):
    C = parse_inline('[[1/sqrt(2), 1/sqrt(2)], [1/sqrt(2), -1/sqrt(2)]]')
    assert np.array_equal(C, chsh)
    assert parse_inline('[0.5, -0.5]').shape == (1, 2)
    for bad in ('[[1, 2], [3]]', '[[1, 2]', '[]', '3'):
        with pytest.raises(ParseError):
            parse_inline(bad)


def test_resolve_matrix(tmp_path, chsh):
    assert np.array_equal(resolve_matrix('chsh'), chsh)
    assert np.array_equal(resolve_matrix('deterministic:1,-1:1,1'), [[1, 1], [-1, -1]])
    f = tmp_path / 'c.txt'
    f.write_text('# two settings\n0.5 0.5\n0.5, -1\n')
    assert np.array_equal(resolve_matrix(str(f)), [[0.5, 0.5], [0.5, -1.0]])
    with pytest.raises(ParseError):
        resolve_matrix(str(tmp_path / 'missing.txt'))


def test_json_records(tmp_path):
    f = tmp_path / 'r.jsonl'
    with open(f, 'w') as s:
        write_json_records(s, [(np.eye(2), None), (np.ones((1, 3)), [0.1, 0.2, 0.3])])
        s.write('\n{"n": 2, "m": 2, "c": [1, 0]}\nnot json\n')
    recs = read_json_records(str(f))
    assert len(recs) == 4
    assert np.array_equal(recs[0].C, np.eye(2))
    assert np.allclose(recs[1].theta, [0.1, 0.2, 0.3])
    assert recs[2].C is None and recs[3].C is None
    assert recs[3].index == 5


def test_netcdf_records(tmp_path):
    f = str(tmp_path / 'r.nc')
    records = [(np.eye(2), np.array([0.1, 0.2, 0.3])), (np.zeros((2, 2)), np.zeros(3))]
    write_netcdf(f, records, description='test', seed=3)
    back = read_records(f)
    assert [r.index for r in back] == [1, 2]
    assert np.array_equal(back[0].C, np.eye(2))
    assert np.allclose(back[0].theta, [0.1, 0.2, 0.3])


def test_analyze_chsh():
    code, (report,) = machine('analyze', 'chsh')
    assert code == 0
    assert report['membership']['verdict'] == 'member'
    assert report['membership']['analytic'] is True
    assert report['extremality']['status'] == 'Extreme'
    assert report['extremality']['unique'] is True
    exp = report['exposedness']
    assert exp['status'] == 'Exposed'
    assert np.allclose(exp['normalized_hyperplane'], [[1, 1], [1, -1]], atol=1e-6)
    assert np.isclose(exp['normalized_offset'], 2 * R2, atol=1e-6)
    assert report['locality']['local'] is False
    assert report['self_test'] is True


def test_analyze_inline_expressions_match_named():
    _, (a,) = machine('analyze', '[[1/sqrt(2), 1/sqrt(2)], [1/sqrt(2), -1/sqrt(2)]]')
    _, (b,) = machine('analyze', 'chsh')
    assert a['input'] == b['input']


def test_analyze_interior_point():
    code, (report,) = machine('analyze', '[[0, 0], [0, 0]]')
    assert code == 0
    assert report['extremality']['status'] == 'NotExtreme'
    assert report['extremality']['representative'] == 'max_margin'
    assert report['exposedness']['status'] == 'NotApplicable'
    assert report['locality']['local'] is True
    assert report['self_test'] is False


def test_analyze_non_member():
    code, (report,) = machine('analyze', '[[1, 1], [1, -1]]')
    assert code == 3
    m = report['membership']
    assert m['verdict'] == 'not_member'
    assert any('minus theta(1, 1)' in v for v in m['violated'])
    sep = m['separating_inequality']
    C = np.array([[1, 1], [1, -1]])
    assert np.sum(np.array(sep['coefficients']) * C) > sep['bound']


def test_analyze_analytic_only_non_member():
    code, (report,) = machine('analyze', 'pr_box', '--method', 'analytic')
    assert code == 3
    assert 'margin' not in report['membership']


def test_analyze_three_settings():
    code, (report,) = machine('analyze', 'mayers_yao')
    assert code == 0
    assert 'analytic' not in report['membership']
    assert report['extremality']['status'] == 'Extreme'
    assert report['exposedness']['status'] == 'Exposed'
    assert 'self_test' not in report


def test_machine_output_is_canonical():
    _, text = run('analyze', 'tilted_example3', '--format', 'machine')
    line = text.strip()
    assert json.dumps(json.loads(line), sort_keys=True) == line


def test_text_output():
    code, text = run('analyze', 'chsh')
    assert code == 0
    assert 'status: Extreme' in text
    assert 'status: Exposed' in text


def test_usage_errors():
    assert run()[0] == 2
    assert run('frobnicate')[0] == 2
    assert run('analyze')[0] == 2
    assert run('analyze', '[[1, 2')[0] == 2
    assert run('analyze', '[[2, 0], [0, 0]]')[0] == 2
    assert run('analyze', 'chsh', '--profile', 'loose')[0] == 2
    assert run('generate', '--count', '0')[0] == 2
    with pytest.raises(SystemExit):
        main(['analyze', 'chsh', '--no-such-flag'])


def test_generate_is_reproducible():
    code, a = run('generate', '--count', '3', '--seed', '42')
    assert code == 0
    _, b = run('generate', '--count', '3', '--seed', '42')
    assert a == b
    recs = [json.loads(line) for line in a.splitlines()]
    assert len(recs) == 3
    assert all(r['n'] == 2 and r['m'] == 2 and len(r['theta']) == 3 for r in recs)


def test_generate_netcdf_matches_jsonl(tmp_path):
    f = str(tmp_path / 'g.nc')
    assert run('generate', '--count', '4', '--seed', '5', '--out', f)[0] == 0
    _, text = run('generate', '--count', '4', '--seed', '5')
    from_json = [np.array(json.loads(line)['c']).reshape(2, 2) for line in text.splitlines()]
    from_nc = [r.C for r in read_records(f)]
    assert all(np.array_equal(a, b) for a, b in zip(from_json, from_nc))


def test_batch_extremality(tmp_path):
    f = str(tmp_path / 'g.jsonl')
    assert run('generate', '--count', '6', '--seed', '1', '--out', f)[0] == 0
    code, lines = machine('batch', f)
    assert code == 0
    results, summary = lines[:-1], lines[-1]['summary']
    assert [r['record'] for r in results] == list(range(1, 7))
    assert all(r['verdict'] == 'Extreme' for r in results)
    assert summary['Extreme'] == 6 and summary['total'] == 6


def test_batch_exposedness_and_failures(tmp_path):
    f = tmp_path / 'mixed.jsonl'
    with open(f, 'w') as s:
        write_json_records(s, [(np.array([[1, 1], [1, -1]]) / R2, None),
                               (np.zeros((2, 2)), None),
                               (np.array([[1.0, 1.0], [1.0, -1.0]]), None)])
        s.write('{"n": 2}\n')
    code, lines = machine('batch', str(f), '--mode', 'exposedness')
    assert code == 0
    verdicts = [r['verdict'] for r in lines[:-1]]
    assert verdicts == ['Exposed', 'NotApplicable', 'NotMember', 'Malformed']
    summary = lines[-1]['summary']
    assert (summary['Exposed'], summary['NotApplicable'], summary['NotMember'],
            summary['Malformed'], summary['total']) == (1, 1, 1, 1, 4)


def test_batch_with_worker_processes(tmp_path):
    f = tmp_path / 'pool.jsonl'
    with open(f, 'w') as s:
        write_json_records(s, [(np.array([[1, 1], [1, -1]]) / R2, None),
                               (np.zeros((2, 2)), None),
                               (np.ones((2, 2)), None)])
    code, lines = machine('batch', str(f), '--jobs', '2')
    assert code == 0
    assert [r['verdict'] for r in lines[:-1]] == ['Extreme', 'NotExtreme', 'Extreme']


def test_batch_empty_and_missing(tmp_path):
    f = tmp_path / 'empty.jsonl'
    f.write_text('')
    code, lines = machine('batch', str(f))
    assert code == 0
    assert lines[-1]['summary']['total'] == 0
    assert run('batch', str(tmp_path / 'none.jsonl'))[0] == 5


def test_support_command():
    code, (report,) = machine('support', '[[1, 1], [1, -1]]')
    assert code == 0
    assert np.isclose(report['value'], 2 * R2, atol=1e-6)
    _, (report,) = machine('support', '[[0, 0], [0, 0]]')
    assert np.isclose(report['value'], 0.0, atol=1e-7)


def test_complete_command(chsh_hat):
    code, (report,) = machine('complete', 'chsh')
    assert code == 0
    assert np.allclose(report['interval_theta34'], [np.pi / 2, np.pi / 2])
    _, (report,) = machine('complete', 'chsh', '--theta34', 'pi/2')
    assert np.allclose(report['chordal_completion'], chsh_hat, atol=1e-12)
    assert np.allclose(report['completion'], chsh_hat, atol=1e-7)
    code, (report,) = machine('complete', 'pr_box')
    assert code == 3
    assert report['interval_theta34'] == 'empty'


def test_tolerance_overrides(monkeypatch):
    _, (report,) = machine('analyze', 'chsh', '--rank-tol', '1e-6', '--gap-tol', '1e-8')
    assert report['tolerances']['rank_rel'] == 1e-6
    assert report['tolerances']['sdp_gap'] == 1e-8
    monkeypatch.setenv('CORRLAB_TOL_PROFILE', 'strict')
    _, (report,) = machine('analyze', 'chsh')
    assert report['tolerances']['psd_abs'] == 1e-9
    assert report['extremality']['status'] == 'Extreme'
    code, (report,) = machine('analyze', 'tilted_example3')
    assert code == 0
    assert report['extremality']['status'] == 'Extreme'


def test_settings_from_dict():
    runner = Corrlab({'seed': 7, 'count': 2, 'theta34': 'pi/4'})
    assert runner.seed == 7 and runner.count == 2
    assert np.isclose(runner.theta34, np.pi / 4)
    assert len(runner.generate()) == 2
    opts, rest = processArgs(['analyze', 'chsh', '--jobs', '3'])
    assert rest == ['analyze', 'chsh'] and opts.jobs == 3


def test_log_file(tmp_path):
    code, _ = run('analyze', 'chsh', '--logfile', 'corrlab.log', '--logdir', str(tmp_path))
    assert code == 0
    text = (tmp_path / 'corrlab.log').read_text()
    assert '__version__' in text
    assert 'completion: margin' in text


def test_batch_records_from_helpers():
    runner = Corrlab({'mode': 'extremality'})
    results, summary, code = runner.batch([Record(1, np.ones((2, 2))), Record(2, None, 'bad')])
    assert code == 0
    assert [r['verdict'] for r in results] == ['Extreme', 'Malformed']
    assert summary['total'] == 2
