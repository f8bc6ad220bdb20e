"""Error type for bad inputs to the bridge."""


class BridgeError(ValueError):
    """Malformed requests, unusable checkpoints, or bad training inputs."""
