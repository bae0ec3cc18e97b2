namespace subreg {
}
