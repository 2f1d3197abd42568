// plain widget, read statically
function size() {
  return [window.innerWidth, window.innerHeight];
}
