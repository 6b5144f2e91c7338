# put the local directory python in path
import sys
sys.path.append('python')
import numpy as np

# try to import the modules we will need
# if any of these fail, you need to install them
# e.g.
# pip install --user -r requirements.txt

import netCDF4
import scipy
import os

# local library that should be in python/corrlab
from corrlab.cli import Corrlab
from corrlab.utils import Record, write_netcdf, dumps_machine

# set up for one generated population:

seed    = 0
count   = 200
jobs    = 1
outdir  = 'results'
logfile = 'experiments.log'

if not os.path.exists(outdir):
    os.makedirs(outdir)

self = Corrlab({'seed': seed, 'count': count, 'jobs': jobs,
                'logfile': logfile, 'logdir': outdir})

population = self.generate()
write_netcdf(os.path.join(outdir, 'extremal_2x2_seed%d.nc' % seed), population, seed=seed,
             description='extremal 2 x 2 correlators from three uniform angles')
records = [Record(i + 1, C, theta=th) for i, (C, th) in enumerate(population)]

summaries = {}
for mode in ('extremality', 'exposedness'):
    self.mode = mode
    results, summary, code = self.batch(records)
    summaries[mode] = summary
    with open(os.path.join(outdir, '%s_seed%d.jsonl' % (mode, seed)), 'w') as f:
        for r in results:
            f.write(dumps_machine(r) + '\n')
    print('%-12s %s' % (mode, ' '.join('%s=%d' % kv for kv in sorted(summary.items()))))

# supporting inequality of each exposed point is tight at the point itself
exposed = [r for r in results if r['verdict'] == 'Exposed']
worst = max([abs(np.sum(r['hyperplane'] * rec.C) - r['offset'])
             for r, rec in zip(results, records) if r['verdict'] == 'Exposed'] or [0.0])
print('exposed %d / %d, worst hyperplane residual %.3e' % (len(exposed), count, worst))
