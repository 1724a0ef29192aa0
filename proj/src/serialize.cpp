namespace ct {}
