"""
Sweeps from the command line
============================

The ``crnoma`` command wraps the same routines and writes CSV or JSON. It
can be called in-process through ``crnoma.cli.main``.
"""

# %%
import os
import tempfile

from crnoma.cli import main, read_table

out = os.path.join(tempfile.mkdtemp(), "aoi.csv")
main(["aoi", "--rate", "0.5", "--users", "3", "--snr-db", "0:20:10", "--super-frames", "10000", "--out", out])
print(open(out).read())

# %%
# Rows parse back into ResultRow objects.
for row in read_table(out):
    print(row.metric_name, row.snr_db, row.analytic, row.mc)

# %%
# Settings can also come from a file. Flags given on the command line win.
conf = os.path.join(os.path.dirname(out), "sweep.conf")
with open(conf, "w") as fh:
    fh.write("rate = 1\nusers = 8\nsnr-db = 10:30:10\ntrials = 50000\n")
main(["sumrate", "--config", conf, "--scheduler", "greedy"])
