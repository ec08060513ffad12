from hyperwatch.cli import entrypoint

entrypoint()
