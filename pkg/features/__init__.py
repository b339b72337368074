"""特征模块"""

from .models import Keypoint, Match, DEFAULT_DESCRIPTOR_DIM
from .matching import match_descriptors
from .vocabulary_tree import VocabularyTree, build_vocabulary, quantize, add_image, query_image
from .extraction import FeatureExtractor, PrecomputedExtractor, extract_features

__all__ = [
    'Keypoint',
    'Match',
    'DEFAULT_DESCRIPTOR_DIM',
    'match_descriptors',
    'VocabularyTree',
    'build_vocabulary',
    'quantize',
    'add_image',
    'query_image',
    'FeatureExtractor',
    'PrecomputedExtractor',
    'extract_features',
]
