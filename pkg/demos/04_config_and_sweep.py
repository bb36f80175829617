"""Config text in, CSV out: the same path the command line uses.

Sweeps k1 across the critical wavenumber and prints the records.  The
equivalent command is

    movingstep sweep --v 0.5 --V0 2 --k1 4 --axis k1=1.5:3.5:0.25
"""

import sys
import warnings

from movingstep import scenario as sio
from movingstep.errors import SemiClassicalWarning

TEXT = """
[physical]
v = 0.5
V0 = 2

[incident]
k1 = 4

[sweep]
k1 = 1.5:3.5:0.25
"""

spec = sio.parse_sweep(TEXT)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", SemiClassicalWarning)
    records = sio.run_sweep(spec)
for r in records:
    print(f"k1 = {r.scenario['k1']:5.2f}  {r.regime:8s}  T_boundary = {r.T_boundary:.6f}  {','.join(r.flags)}")

sys.stdout.write(sio.records_to_csv(records[:2], {"demo": "sweep"}))
