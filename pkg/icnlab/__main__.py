from icnlab.experiments.cli import run

run()
