public class PublicStaticField {
    public static PublicStaticField instance = new PublicStaticField();

    private PublicStaticField() {}

    public static PublicStaticField getInstance() {
        return instance;
    }
}
