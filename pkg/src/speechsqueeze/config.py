"""Default parameters for every stage of the pipeline.

All tunable constants live here so the CLI and the library agree on one set
of defaults. Each value can be overridden per call or by a CLI flag.

Segmentation (fixed, per-utterance energy threshold)
    SEGMENT_FRAME_MS     analysis frame length
    SEGMENT_HOP_MS       frame hop; also the boundary resolution
    SEGMENT_THRESHOLD_DB silence threshold relative to the loudest frame
    MIN_SILENCE_MS       silence runs shorter than this are absorbed
    MIN_SPEECH_MS        speech runs shorter than this are absorbed

WSOLA
    WSOLA_FRAME_MS       synthesis frame length
    WSOLA_OVERLAP        overlap fraction between consecutive frames
    WSOLA_TOLERANCE_MS   half-width of the similarity search region
    WSOLA_WINDOW         tapering window
    RATE_WARNING         local rates above this trigger a quality warning

Scheduling and scoring
    SILENCE_WEIGHT_Y     NL3 silence-to-speech rate ratio
    MAX_EDIT_DISTANCE    misspelling tolerance for word matching
    MIN_FUZZY_LENGTH     shortest token eligible for fuzzy matching
    OUTLIER_K            listener outlier cut, in standard deviations
"""

SEGMENT_FRAME_MS = 25.0
SEGMENT_HOP_MS = 10.0
SEGMENT_THRESHOLD_DB = -40.0
MIN_SILENCE_MS = 50.0
MIN_SPEECH_MS = 30.0

WSOLA_FRAME_MS = 32.0
WSOLA_OVERLAP = 0.5
WSOLA_TOLERANCE_MS = 8.0
WSOLA_WINDOW = "hann"
RATE_WARNING = 4.0

SILENCE_WEIGHT_Y = 2.0

MAX_EDIT_DISTANCE = 1
MIN_FUZZY_LENGTH = 4
OUTLIER_K = 3.0
