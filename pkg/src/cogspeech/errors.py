"""Exception and warning types shared across the pipeline."""


class CogspeechError(Exception):
    """Base class for all errors raised by this package."""


# --- audio ---

class MalformedWav(CogspeechError):
    """RIFF/WAVE container is truncated or structurally invalid."""


class UnsupportedEncoding(CogspeechError):
    """WAV codec other than PCM16 / IEEE float, or channel count > 2."""


class AudioTooShort(CogspeechError):
    """Input audio shorter than one analysis frame."""


# --- transcripts ---

class EmptySelection(CogspeechError):
    """No keep-interval survives clamping to the audio duration."""


# --- features ---

class EmptyTrajectory(CogspeechError):
    """Functional application on a zero-length trajectory."""


class LengthMismatch(CogspeechError):
    """Paired sequences of unequal length."""


class EmptySubset(CogspeechError):
    """Merit requested for an empty feature subset."""


# --- models ---

class DegenerateLabels(CogspeechError):
    """Training data contains fewer than two classes."""


class NonFiniteFeature(CogspeechError):
    """NaN or infinity in a feature matrix."""


class DimensionMismatch(CogspeechError):
    """Vector length does not match the model or matrix layout."""


class InsufficientClassCoverage(CogspeechError):
    """Emotion corpus is missing a class or has < 2 examples for one."""


class LabelOutOfVocabulary(CogspeechError):
    """Label not in the frozen class list."""


class RecipeMismatch(CogspeechError):
    """Model was trained with a different feature recipe version."""


# --- fusion / evaluation ---

class DuplicateMember(CogspeechError):
    """Two fusion members share a feature-set id."""


class ClassOrderMismatch(CogspeechError):
    """Posterior bundle members disagree on class order."""


class MissingPosterior(CogspeechError):
    """An utterance lacks an out-of-fold posterior during stacking."""


class TooFewSamples(CogspeechError):
    """A class has no members, so folds cannot be formed."""


# --- configuration / manifests ---

class ConfigError(CogspeechError):
    """Invalid experiment configuration; message names the field."""


class ManifestError(CogspeechError):
    """Corpus manifest is missing, unreadable, or malformed."""


class PipelineWarning(UserWarning):
    """Base class for non-fatal conditions surfaced to reports."""


class AudioTooShortWarning(PipelineWarning):
    pass


class NoVoicedFramesWarning(PipelineWarning):
    pass


class UntimedTurnsWarning(PipelineWarning):
    pass


class ClampedIntervalWarning(PipelineWarning):
    pass


class EmptySelectionWarning(PipelineWarning):
    pass


class WordRateFallbackWarning(PipelineWarning):
    pass


class UndefinedMetricWarning(PipelineWarning):
    pass
