class A {
  void greet(String name) {
    prepare(name);
    log.info("greeting {}", name);
    send(name);
  }
}
