"""Tabled Datalog with claim-guarded parallel reachability and O(1) table merging."""
