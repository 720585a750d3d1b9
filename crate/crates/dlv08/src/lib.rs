//! E-health prescription protocol corpus (under construction).
