"""Exception types raised by the package."""


class GreenhouseError(Exception):
    """Base class for all package errors."""


class ConfigError(GreenhouseError):
    """Invalid configuration value or document."""


class WeatherError(GreenhouseError):
    """Malformed or inconsistent weather data."""


class IntegrationError(GreenhouseError):
    """Numerical failure inside the integrator."""


class EpisodeError(GreenhouseError):
    """Illegal episode operation, e.g. stepping a finished episode."""


class PolicyArtifactError(GreenhouseError):
    """Invalid or incompatible serialized policy."""
