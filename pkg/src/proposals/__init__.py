"""Split proposals for superclusters: K-flat and center-point splitting."""
