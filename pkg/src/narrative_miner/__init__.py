"""Analytics for topic consumption on social media corpora.

From a post/like/comment corpus to term co-occurrence backbones, community
validation of topic dictionaries, polarized user cohorts, heavy-tail fits,
survival curves and an ordinal model of cross-topic mobility.
"""

__version__ = "0.1.0"
