'''
Input parsing, record files and logging helpers for the corrlab front end.

Matrices may be given inline (``[[1/sqrt(2), 1/sqrt(2)], [1/sqrt(2), -1/sqrt(2)]]``),
by instance name, as a whitespace matrix file, as JSON-lines records
``{"n": 2, "m": 2, "c": [...]}`` or as a netCDF record file (``.nc``).
'''

__license__ = "GPL"
__version__ = "1.0.0"
__status__ = "Production"

import ast
import json
import logging
import operator
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
import netCDF4 as nc

from .errors import DimensionMismatch, ParseError, UnknownName
from .models import NAMED, named

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)-15s %(clientip)s %(user)-8s %(message)s'

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {'sqrt': np.sqrt, 'cos': np.cos, 'sin': np.sin, 'tan': np.tan,
          'arccos': np.arccos, 'acos': np.arccos, 'arcsin': np.arcsin, 'asin': np.arcsin,
          'arctan': np.arctan, 'atan': np.arctan, 'exp': np.exp, 'log': np.log}
_CONSTS = {'pi': np.pi, 'e': np.e}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    if isinstance(node, ast.Name) and node.id in _CONSTS:
        return _CONSTS[node.id]
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        return float(_FUNCS[node.func.id](_eval_node(node.args[0])))
    raise ParseError('unsupported expression element %s' % ast.dump(node))


def evaluate(expr):
    '''
    Evaluate an arithmetic expression such as ``-1/sqrt(2)`` or ``cos(pi/8)``.

    Only numbers, + - * / **, pi, e and the functions sqrt, cos, sin, tan,
    arccos, arcsin, arctan, exp, log are accepted.
    '''
    if isinstance(expr, (int, float)):
        return float(expr)
    try:
        tree = ast.parse(str(expr).strip(), mode='eval')
    except SyntaxError as e:
        raise ParseError('cannot parse %r: %s' % (expr, e))
    try:
        v = _eval_node(tree)
    except ZeroDivisionError:
        raise ParseError('division by zero in %r' % expr)
    if not np.isfinite(v):
        raise ParseError('%r does not evaluate to a finite number' % expr)
    return v


def _rows_to_matrix(rows):
    if not rows or any(len(r) != len(rows[0]) for r in rows) or len(rows[0]) == 0:
        raise ParseError('matrix rows must be nonempty and of equal length')
    return np.array(rows, dtype=float)


def parse_inline(text):
    '''parse ``[[a, b], [c, d]]`` with expression entries into a 2-d array'''
    try:
        tree = ast.parse(text.strip(), mode='eval').body
    except SyntaxError as e:
        raise ParseError('cannot parse matrix %r: %s' % (text, e))
    if not isinstance(tree, ast.List):
        raise ParseError('inline matrix must be a bracketed list of rows')
    if all(not isinstance(el, ast.List) for el in tree.elts):
        return _rows_to_matrix([[_eval_node(el) for el in tree.elts]])
    rows = []
    for row in tree.elts:
        if not isinstance(row, ast.List):
            raise ParseError('mixed rows and scalars in %r' % text)
        rows.append([_eval_node(el) for el in row.elts])
    return _rows_to_matrix(rows)


def parse_named(text):
    '''
    Instance names, including ``deterministic:x:y`` with comma separated signs,
    e.g. ``deterministic:1,-1:1,1``.
    '''
    if text.startswith('deterministic'):
        parts = text.split(':')
        if len(parts) != 3:
            raise ParseError('use deterministic:x1,x2,...:y1,y2,...')
        x = [evaluate(v) for v in parts[1].split(',')]
        y = [evaluate(v) for v in parts[2].split(',')]
        return named('deterministic', x, y)
    return named(text)


def read_matrix_file(filename):
    '''whitespace (or comma) separated matrix, one row per line, # comments'''
    rows = []
    with open(filename) as f:
        for line in f:
            line = line.split('#')[0].replace(',', ' ').strip()
            if line:
                rows.append([evaluate(tok) for tok in line.split()])
    return _rows_to_matrix(rows)


@dataclass
class Record:
    '''one entry of a record file; C is None when the entry is malformed'''
    index: int
    C: Optional[np.ndarray]
    error: str = ''
    theta: Optional[np.ndarray] = None


def record_from_json(obj):
    n = int(obj['n'])
    m = int(obj['m'])
    c = [evaluate(v) for v in obj['c']]
    if n < 1 or m < 1 or len(c) != n * m:
        raise ParseError('record declares %d x %d but carries %d entries' % (n, m, len(c)))
    return np.array(c, dtype=float).reshape(n, m)


def read_json_records(filename):
    '''JSON-lines records; blank lines ignored, malformed lines kept as errors'''
    out = []
    with open(filename) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                C = record_from_json(obj)
                theta = np.array(obj['theta'], dtype=float) if 'theta' in obj else None
                out.append(Record(lineno, C, theta=theta))
            except (ValueError, KeyError, TypeError, ParseError) as e:
                logger.warning('skipping malformed record on line %d: %s', lineno, e)
                out.append(Record(lineno, None, error=str(e)))
    return out


def read_netcdf(filename):
    '''
    read correlator records from a netCDF file written by write_netcdf

    Returns
    -------
    list of Record
    '''
    logger.info('reading %s', filename)
    ncfile = nc.Dataset(filename, 'r')
    try:
        c = np.array(ncfile.variables['c'][:], dtype=float)
        theta = (np.array(ncfile.variables['theta'][:], dtype=float)
                 if 'theta' in ncfile.variables else None)
    finally:
        ncfile.close()
    return [Record(i + 1, c[i], theta=None if theta is None else theta[i])
            for i in range(c.shape[0])]


def write_netcdf(filename, records, description='', seed=None):
    '''
    write correlator records (all of one shape) to a netCDF file

    Parameters
    ----------
    filename : output file name
    records : list of (C, theta) pairs, theta may be None
    description : free text stored as a global attribute
    seed : generator seed, stored as a global attribute when given
    '''
    shapes = {np.shape(C) for C, _ in records}
    if len(shapes) > 1:
        raise DimensionMismatch('netCDF records must share one shape, got %s' % sorted(shapes))
    n, m = shapes.pop() if shapes else (2, 2)
    logger.info('writing %s', filename)
    ncfile = nc.Dataset(filename, 'w', format='NETCDF4')
    try:
        ncfile.createDimension('record', len(records))
        ncfile.createDimension('row', n)
        ncfile.createDimension('col', m)
        data = ncfile.createVariable('c', 'f8', ('record', 'row', 'col'), zlib=True)
        data[:] = np.array([C for C, _ in records]).reshape(len(records), n, m)
        if records and all(th is not None for _, th in records):
            ncfile.createDimension('angle', len(records[0][1]))
            data = ncfile.createVariable('theta', 'f8', ('record', 'angle'), zlib=True)
            data[:] = np.array([th for _, th in records])
        setattr(ncfile, 'description', description)
        setattr(ncfile, 'count', len(records))
        if seed is not None:
            setattr(ncfile, 'seed', int(seed))
    finally:
        ncfile.close()


def write_json_records(stream, records):
    for C, theta in records:
        C = np.asarray(C, dtype=float)
        rec = {'n': C.shape[0], 'm': C.shape[1], 'c': C.ravel().tolist()}
        if theta is not None:
            rec['theta'] = np.asarray(theta, dtype=float).tolist()
        stream.write(json.dumps(rec) + '\n')


def read_records(filename):
    '''records from a .nc file or a JSON-lines file'''
    if filename.endswith('.nc'):
        return read_netcdf(filename)
    return read_json_records(filename)


def resolve_matrix(source):
    '''
    Turn a command-line matrix argument into an array.

    Tried in order: instance name, inline brackets, existing file (.nc or
    JSON-lines holding exactly one record, otherwise a whitespace matrix).
    '''
    source = source.strip()
    if source in NAMED or source.startswith('deterministic'):
        return parse_named(source)
    if source.startswith('['):
        return parse_inline(source)
    if os.path.exists(source):
        if source.endswith('.nc') or source.endswith('.jsonl') or source.endswith('.json'):
            recs = read_records(source)
            if len(recs) != 1 or recs[0].C is None:
                raise ParseError('%s must hold exactly one well-formed record' % source)
            return recs[0].C
        return read_matrix_file(source)
    raise ParseError('%r is neither an instance name, an inline matrix nor a file' % source)


def jsonable(obj):
    '''convert numpy containers and scalars for json.dumps'''
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def dumps_machine(report):
    return json.dumps(jsonable(report), sort_keys=True)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return '%.17g' % v
    return str(v)


def format_text(report, indent=0):
    '''indented key: value listing; matrices one row per line'''
    lines = []
    pad = '  ' * indent
    for key, v in report.items():
        if isinstance(v, dict):
            lines.append('%s%s:' % (pad, key))
            lines.extend(format_text(v, indent + 1))
        elif isinstance(v, np.ndarray) and v.ndim == 2:
            lines.append('%s%s:' % (pad, key))
            lines.extend('%s  %s' % (pad, ' '.join(_fmt(x) for x in row)) for row in v)
        elif isinstance(v, (list, tuple, np.ndarray)):
            items = list(np.ravel(v)) if isinstance(v, np.ndarray) else list(v)
            if all(np.isscalar(x) for x in items):
                text = ' '.join(_fmt(x) for x in items)
            else:
                text = '; '.join(str(x) for x in items)
            lines.append('%s%s: %s' % (pad, key, text))
        else:
            lines.append('%s%s: %s' % (pad, key, _fmt(v)))
    return lines


class ContextFilter(logging.Filter):
    '''supply clientip and user to records that were logged without them'''

    def __init__(self, d):
        super(ContextFilter, self).__init__()
        self.d = d

    def filter(self, record):
        for k, v in self.d.items():
            if not hasattr(record, k):
                setattr(record, k, v)
        return True


def client_context():
    try:
        from socket import gethostname, gethostbyname
        clientip = gethostbyname(gethostname())
    except Exception:
        clientip = ''
    try:
        import getpass
        user = getpass.getuser()
    except Exception:
        user = ''
    return {'clientip': clientip, 'user': user}
