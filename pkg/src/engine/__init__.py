"""EM and EM_is engines for clusterwise linear regression."""
