from .serve import entrypoint

entrypoint()
