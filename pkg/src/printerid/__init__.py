"""Source printer identification from scanned text pages.

The pipeline locates letters without OCR (Otsu + connected components +
median-area filtering), splits each letter into flat/edge/background regions,
runs local tetra pattern operators on Gabor response planes of the flat and
edge regions, pools groups of consecutive letters into averaged feature
vectors, and classifies them with a single one-vs-one linear max-margin
model. A synthetic virtual-printer generator provides ground truth for
end-to-end verification.
"""

__version__ = "0.1.0"
